#!/usr/bin/env python3
"""Regenerate the recorded-fixture corpus under fixtures/.

The corpus models what the Wayback Machine and Arquivo.pt return for
Instagram account pages: CDX listings, replay redirect chains, account-page
HTML in each page-source era, image replays, and a few live-web answers for
probe tests. Output is fully determined by SEED.
"""

import datetime as dt
import hashlib
import json
import random
import re
import shutil
from pathlib import Path
from urllib.parse import parse_qsl, urlencode, urlsplit

SEED = 20230601
ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"
CASSETTE = OUT / "cassette"
LIVE = OUT / "live"

WB = "https://web.archive.org"
WB_CDX = WB + "/cdx/search/cdx"
AQ = "https://arquivo.pt"
AQ_CDX = AQ + "/wayback/cdx"

# Handle, display name, mementos as of June 2023. Fixtures carry one tenth.
TOP25 = [
    ("instagram", "Instagram", 4981),
    ("cristiano", "Cristiano Ronaldo", 1913),
    ("leomessi", "Leo Messi", 2294),
    ("selenagomez", "Selena Gomez", 3712),
    ("kyliejenner", "Kylie", 5113),
    ("therock", "Dwayne Johnson", 2354),
    ("arianagrande", "Ariana Grande", 2402),
    ("kimkardashian", "Kim Kardashian", 8883),
    ("beyonce", "Beyoncé", 3582),
    ("khloekardashian", "Khloé", 3081),
    ("nike", "Nike", 1169),
    ("kendalljenner", "Kendall", 3419),
    ("justinbieber", "Justin Bieber", 4338),
    ("natgeo", "National Geographic", 4719),
    ("taylorswift", "Taylor Swift", 3351),
    ("virat.kohli", "Virat Kohli", 291),
    ("jlo", "Jennifer Lopez", 3541),
    ("nickiminaj", "Nicki Minaj", 2460),
    ("kourtneykardash", "Kourtney Kardashian", 3564),
    ("mileycyrus", "Miley Cyrus", 3581),
    ("neymarjr", "Neymar Jr", 1073),
    ("katyperry", "KATY PERRY", 2625),
    ("zendaya", "Zendaya", 920),
    ("kevinhart4real", "Kevin Hart", 813),
    ("iamcardib", "Cardi B", 1199),
]
SCALE = 10
ARQUIVO_TOTAL = 1682

HEALTH = [
    ("thisisbillgates", "Bill Gates", 140),
    ("who", "World Health Organization", 160),
    ("cdcgov", "CDC", 120),
    ("nihgov", "NIH", 90),
    ("hhsgov", "HHS", 70),
]

WINDOW_START = dt.datetime(2012, 11, 7, 0, 0, 0)
WINDOW_END = dt.datetime(2023, 6, 15, 0, 0, 0)
HTTPS_SWITCH = dt.datetime(2015, 2, 1)
FIRST_LOGIN = dt.datetime(2019, 8, 22, 14, 7, 31)
LOGIN_START = dt.datetime(2019, 8, 23)

# Page-source format changes (day of change).
ERA_CHANGES = [dt.date(2014, 3, 20), dt.date(2015, 2, 10), dt.date(2018, 4, 12)]
SCRAPE_END = dt.date(2018, 6, 8)

YEAR_WEIGHT = {
    2012: 0.6, 2013: 4, 2014: 6, 2015: 8, 2016: 9, 2017: 10, 2018: 11,
    2019: 12, 2020: 13, 2021: 10, 2022: 8, 2023: 3,
}

BEYONCE_ID = "247944034"
BEYONCE_TS = "20170214033011"
BEYONCE_TS2 = "20170301194512"
BEYONCE_PIC = "https://scontent-sea1-1.cdninstagram.com/t51.2885-19/s150x150/12918039_230227960666719_282379501_a.jpg"
BEYONCE_DISPLAY = (
    "https://scontent-sea1-1.cdninstagram.com/t51.2885-15/e35/"
    "16465013_1625467001093055_3757710872030478336_n.jpg?ig_cache_key=MTQ0MDc3OTY0ODkyODkwMzc3MA%3D%3D.2"
)
BEYONCE_CAPTION = (
    "We would like to share our love and happiness. We have been blessed two times over. "
    "We are incredibly grateful  that our family will be growing by two, and we thank you "
    "for your well wishes. - The Carters"
)

rng = random.Random(SEED)


def ts(d):
    return d.strftime("%Y%m%d%H%M%S")


def parse_ts(s):
    return dt.datetime.strptime(s, "%Y%m%d%H%M%S")


def sha1_b32(text):
    import base64

    return base64.b32encode(hashlib.sha1(text.encode()).digest()).decode()


def key_of(url):
    p = urlsplit(url)
    pairs = sorted(parse_qsl(p.query, keep_blank_values=True))
    k = f"{p.scheme}://{p.netloc}{p.path}"
    if pairs:
        k += "?" + "&".join(f"{a}={b}" for a, b in pairs)
    return k


class Cassette:
    def __init__(self, root):
        self.root = root
        self.files = {}
        self.by_key = {}

    def add(self, index, url, status, location=None, content_type=None, body=None, body_file=None, data=None):
        ex = {"url": url, "status": status}
        if location is not None:
            ex["location"] = location
        if content_type is not None:
            ex["content_type"] = content_type
        if body is not None:
            ex["body"] = body
        if body_file is not None:
            ex["body_file"] = body_file
            path = self.root / body_file
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data if isinstance(data, bytes) else data.encode("utf-8"))
        k = key_of(url)
        if k in self.by_key:
            prev = self.by_key[k]
            same = {x: prev.get(x) for x in ("status", "location")} == {x: ex.get(x) for x in ("status", "location")}
            if not same:
                raise RuntimeError(f"conflicting exchanges for {url}")
            return
        self.by_key[k] = ex
        self.files.setdefault(index, []).append(ex)

    def has(self, url):
        return key_of(url) in self.by_key

    def write(self):
        for name, lines in self.files.items():
            with open(self.root / f"{name}.jsonl", "w", encoding="utf-8") as f:
                for ex in lines:
                    f.write(json.dumps(ex, ensure_ascii=False, sort_keys=True) + "\n")


def cdx_request(base, target, **extra):
    params = {"url": target, "output": "json"}
    params.update(extra)
    return base + "?" + urlencode(params)


def urlkey(original):
    p = urlsplit(original)
    host = p.netloc.lower()
    if host.startswith("www."):
        host = host[4:]
    surt = ",".join(reversed(host.split(".")))
    path = p.path.rstrip("/") or ""
    k = f"{surt}){path.lower()}"
    if p.query:
        k += "?" + p.query
    return k


# ---------------------------------------------------------------- outcomes

def p_login(d):
    points = [
        (dt.datetime(2019, 8, 23), 0.30),
        (dt.datetime(2019, 12, 31), 0.50),
        (dt.datetime(2020, 8, 31), 0.66),
        (dt.datetime(2020, 12, 31), 0.74),
        (dt.datetime(2021, 6, 30), 0.90),
        (dt.datetime(2023, 12, 31), 0.93),
    ]
    if d < points[0][0]:
        return 0.0
    for (a, pa), (b, pb) in zip(points, points[1:]):
        if d <= b:
            f = (d - a).total_seconds() / (b - a).total_seconds()
            return pa + f * (pb - pa)
    return points[-1][1]


def pick(weights):
    r = rng.random() * sum(w for _, w in weights)
    for k, w in weights:
        r -= w
        if r <= 0:
            return k
    return weights[-1][0]


def outcome(d, login_start):
    if d < HTTPS_SWITCH:
        table = [("success", 80), ("revisit", 8), ("canonical", 7.5), ("other", 1), ("loop", 0.2),
                 ("404", 1.5), ("403", 0.3), ("503", 1.5)]
    elif d < login_start:
        table = [("success", 52), ("revisit", 7), ("canonical", 35), ("other", 1), ("loop", 0.2),
                 ("404", 3), ("503", 1.8)]
    else:
        pl = p_login(d)
        rest = 1 - pl
        table = [("login", pl), ("success", 0.62 * rest), ("revisit", 0.22 * rest), ("canonical", 0.10 * rest),
                 ("other", 0.01 * rest), ("404", 0.03 * rest), ("503", 0.02 * rest)]
    return pick(table)


def random_times(n, rng_local):
    years = sorted(YEAR_WEIGHT)
    out = set()
    while len(out) < n:
        y = pick([(y, YEAR_WEIGHT[y]) for y in years])
        start = max(dt.datetime(y, 1, 1), WINDOW_START)
        end = min(dt.datetime(y + 1, 1, 1), WINDOW_END)
        secs = int((end - start).total_seconds())
        out.add(start + dt.timedelta(seconds=rng_local.randrange(secs)))
    return sorted(out)


# ---------------------------------------------------------------- archives

class Archive:
    def __init__(self, name, replay_base, cdx_base, cassette, index):
        self.name = name
        self.replay_base = replay_base
        self.cdx_base = cdx_base
        self.cassette = cassette
        self.index = index
        self.used = set()

    def urim(self, stamp, original, modifier=""):
        return f"{self.replay_base}{stamp}{modifier}/{original}"

    def fresh_stamp(self, base, original):
        d = parse_ts(base)
        while True:
            d += dt.timedelta(seconds=rng.randint(1, 40))
            s = ts(d)
            if key_of(self.urim(s, original)) not in self.used:
                self.used.add(key_of(self.urim(s, original)))
                return s

    def redirect(self, frm, to, status=302):
        loc = to
        if self.name == "wayback" and rng.random() < 0.15:
            loc = to[len(WB):]  # host-relative Location
        self.cassette.add(self.index, frm, status, location=loc, content_type="text/html")

    def final(self, url, status=200):
        self.cassette.add(self.index, url, status, content_type="text/html", body="")


def canon_final(handle, d):
    return f"https://www.instagram.com/{handle}/" if d >= HTTPS_SWITCH else f"http://instagram.com/{handle}/"


def original_for(kind, handle, d):
    if kind == "canonical":
        fin = canon_final(handle, d)
        options = [f"http://instagram.com/{handle}", f"http://instagram.com/{handle}/", f"https://instagram.com/{handle}/",
                   f"http://www.instagram.com/{handle}/", f"https://www.instagram.com/{handle}", f"https://instagram.com/{handle}"]
        return rng.choice([o for o in options if o != fin])
    if d < HTTPS_SWITCH:
        return rng.choice([f"http://instagram.com/{handle}/", f"http://instagram.com/{handle}", f"https://instagram.com/{handle}/"])
    if rng.random() < 0.1:
        return f"https://www.instagram.com/{handle}/?hl=en"
    return f"https://www.instagram.com/{handle}/"


LOGIN_VARIANTS = [
    "https://www.instagram.com/accounts/login/",
    "https://www.instagram.com/accounts/login/?next=/{h}/",
    "https://www.instagram.com/accounts/login/?next=%2F{h}%2F&source=desktop_nav",
    "https://www.instagram.com/accounts/login",
]


def build_chain(arc, kind, stamp, original, handle):
    """Record replay exchanges for a capture; returns (label_base, hops)."""
    start = arc.urim(stamp, original)
    arc.used.add(key_of(start))
    d = parse_ts(stamp)
    if kind == "canonical":
        fin = canon_final(handle, d)
        if rng.random() < 0.25:
            mid_orig = f"https://instagram.com/{handle}/"
            if mid_orig in (original, fin):
                mid_orig = f"http://www.instagram.com/{handle}/"
            mid = arc.urim(arc.fresh_stamp(stamp, mid_orig), mid_orig)
            end = arc.urim(arc.fresh_stamp(stamp, fin), fin)
            arc.redirect(start, mid, 301)
            arc.redirect(mid, end, 301)
            arc.final(end)
            return "redirect_canonical", 2
        end = arc.urim(arc.fresh_stamp(stamp, fin), fin)
        arc.redirect(start, end, rng.choice([301, 302]))
        arc.final(end)
        return "redirect_canonical", 1
    if kind == "login":
        login = rng.choice(LOGIN_VARIANTS).format(h=handle)
        end = arc.urim(arc.fresh_stamp(stamp, login), login)
        if rng.random() < 0.2:
            mid_orig = f"https://www.instagram.com/{handle}/"
            if mid_orig == original:
                mid_orig = f"https://www.instagram.com/{handle}"
            mid = arc.urim(arc.fresh_stamp(stamp, mid_orig), mid_orig)
            arc.redirect(start, mid)
            arc.redirect(mid, end)
            arc.final(end)
            return "redirect_login", 2
        arc.redirect(start, end)
        arc.final(end)
        return "redirect_login", 1
    if kind == "other":
        dest = rng.choice(["https://www.instagram.com/", f"https://www.instagram.com/{handle}official/", "https://help.instagram.com/"])
        end = arc.urim(arc.fresh_stamp(stamp, dest), dest)
        arc.redirect(start, end)
        arc.final(end)
        return "redirect_other", 1
    if kind == "loop":
        other = f"https://instagram.com/{handle}/" if original != f"https://instagram.com/{handle}/" else f"http://instagram.com/{handle}/"
        back = arc.urim(arc.fresh_stamp(stamp, other), other)
        arc.redirect(start, back)
        arc.redirect(back, start)
        return "redirect_other", None
    raise ValueError(kind)


def revisit_fallback(arc, stamp, original, handle, d, login_start):
    """Network resolution for a revisit with no digest match."""
    start = arc.urim(stamp, original)
    arc.used.add(key_of(start))
    r = rng.random()
    if r < 0.1:
        build_chain(arc, "loop", stamp, original, handle)
        return "revisit:unresolved", None
    if d >= login_start and rng.random() < p_login(d):
        _, hops = build_chain(arc, "login", stamp, original, handle)
        return "revisit:redirect_login", hops
    if r < 0.2:
        arc.final(start, 404)
        return "revisit:client_error:404", 0
    if r < 0.3 and original != canon_final(handle, d) and "?" not in original:
        _, hops = build_chain(arc, "canonical", stamp, original, handle)
        return "revisit:redirect_canonical", hops
    arc.final(start, 200)
    return "revisit:success", 0


def harvest(arc, handle, n, login_start, forced=None, first_login=None):
    """Generate captures of one account and their replay behaviour."""
    forced = forced or {}
    local = random.Random(f"{SEED}-{arc.name}-{handle}")
    times = [t for t in random_times(n, local) if ts(t) not in forced]
    rows = []
    for t in times:
        rows.append((ts(t), None))
    for s, orig in forced.items():
        rows.append((s, ("success", orig)))
    if first_login:
        rows.append((ts(first_login), ("login", f"https://www.instagram.com/{handle}/")))
    rows.sort()
    records = []
    prior = []  # (digest, label) of non-revisit captures
    for stamp, fixed in rows:
        d = parse_ts(stamp)
        if fixed:
            kind, original = fixed
        else:
            kind = outcome(d, login_start)
            if kind == "login" and d < login_start:
                kind = "success"
            original = original_for(kind, handle, d)
        mime, status, hops = "text/html", None, None
        if kind == "success":
            status, label, hops = "200", "success", None
            digest = sha1_b32(f"{handle}-{d.year}-{d.month}-{local.randrange(3)}")
        elif kind in ("404", "403", "503"):
            status = kind
            label = ("client_error:" if kind[0] == "4" else "server_error:") + kind
            digest = sha1_b32(f"error-{kind}")
        elif kind == "revisit":
            status = "-"
            mime = "warc/revisit" if rng.random() > 0.05 else "text/html"
            if prior and rng.random() < 0.70:
                digest, base = rng.choice(prior[-8:])
                label = "revisit:" + base
            else:
                digest = sha1_b32(f"fresh-{handle}-{stamp}")
                label, hops = revisit_fallback(arc, stamp, original, handle, d, login_start)
        else:
            status = rng.choice(["301", "302"]) if kind == "canonical" else "302"
            base, hops = build_chain(arc, kind, stamp, original, handle)
            label = base
            digest = {
                "canonical": sha1_b32(f"canon-{handle}"),
                "login": sha1_b32("login-wall-redirect"),
                "other": sha1_b32(f"other-{handle}"),
                "loop": sha1_b32(f"loop-{handle}-{stamp}"),
            }[kind]
        if kind != "revisit":
            prior.append((digest, label))
        if kind == "revisit" and label.startswith("revisit:") and hops is None and label != "revisit:unresolved":
            hops = None
        records.append({
            "timestamp": stamp,
            "original": original,
            "mimetype": mime,
            "statuscode": status,
            "digest": digest,
            "length": str(local.randint(900, 60000)),
            "label": label,
            "hops": hops,
        })
    return records


def wayback_body(records, page=None, resume=None):
    rows = [["urlkey", "timestamp", "original", "mimetype", "statuscode", "digest", "length"]]
    for r in sorted(records, key=lambda r: (urlkey(r["original"]), r["timestamp"])) if page is None else page:
        rows.append([urlkey(r["original"]), r["timestamp"], r["original"], r["mimetype"], r["statuscode"], r["digest"], r["length"]])
    if resume:
        rows.append([])
        rows.append([resume])
    return "[" + ",\n".join(json.dumps(r) for r in rows) + "]\n"


def arquivo_body(records):
    out = []
    for r in sorted(records, key=lambda r: (urlkey(r["original"]), r["timestamp"])):
        out.append(json.dumps({
            "urlkey": urlkey(r["original"]),
            "timestamp": r["timestamp"],
            "url": r["original"],
            "mime": r["mimetype"],
            "status": r["statuscode"],
            "digest": r["digest"],
            "length": r["length"],
            "offset": str(rng.randint(1000, 900000000)),
            "filename": f"IAH-2019{rng.randint(1000, 9999)}-00{rng.randint(100, 999)}.warc.gz",
        }))
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------- page HTML

WAYBACK_HEAD = """<script src="//archive.org/includes/analytics.js?v=cf34f82" type="text/javascript"></script>
<script type="text/javascript">window.addEventListener('DOMContentLoaded',function(){var v=archive_analytics.values;v.service='wb';v.server_name='wwwb-app200.us.archive.org';});</script>
<script type="text/javascript" src="/_static/js/bundle-playback.js?v=1WaXNDFE" charset="utf-8"></script>
<script type="text/javascript" src="/_static/js/wombat.js?v=txqj7nKC" charset="utf-8"></script>
<script type="text/javascript">
  __wm.init("https://web.archive.org/web");
  __wm.wombat("{original}","{stamp}","https://web.archive.org/","web","/_static/",
	      "{epoch}");
</script>
<link rel="stylesheet" type="text/css" href="/_static/css/banner-styles.css?v=S1zqJCYt" />
<!-- End Wayback Rewrite JS Include -->
"""

TOOLBAR = """<!-- BEGIN WAYBACK TOOLBAR INSERT -->
<div id="wm-ipp-base" lang="en" style="display:none;direction:ltr;"><div id="wm-ipp" style="position:fixed;left:0;top:0;right:0;">
<div id="wm-ipp-inside"><div id="wm-logo"><a href="/web/" title="Wayback Machine home page">Wayback Machine</a></div>
<div id="wm-capinfo"><a href="/web/{stamp}*/{original}">{n} captures</a></div></div></div></div>
<!-- END WAYBACK TOOLBAR INSERT -->
"""


def ascii_json(v):
    return json.dumps(v, ensure_ascii=True, separators=(",", ":"))


def slash_json(v):
    return ascii_json(v).replace("/", "\\/")


def shortcode(local, d):
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-"
    if d.year < 2016:
        n = local.choice([9, 10])
        return "".join(local.choice(alphabet[:62]) for _ in range(n))
    return "B" + "".join(local.choice(alphabet) for _ in range(10))


EMOJI = ["\U0001F34B", "❤️", "\U0001F41D", "\U0001F449", "\U0001F60D", "⚽", "\U0001F30E", "✨"]


def caption(local, handle):
    words = ["new", "music", "tonight", "thank", "you", "love", "tour", "family", "summer", "photo", "by",
             "@" + handle, "#tbt", "#nofilter", "link", "in", "bio", "¡hola!", "café", "\"quoted\""]
    n = local.randint(2, 14)
    text = " ".join(local.choice(words) for _ in range(n))
    if local.random() < 0.5:
        text += " " + local.choice(EMOJI)
    if local.random() < 0.2:
        text += "\n" + local.choice(words)
    return text


class Profile:
    def __init__(self, handle, name, d, local):
        self.handle = handle
        self.name = name
        self.id = BEYONCE_ID if handle == "beyonce" else str(int(hashlib.sha1(handle.encode()).hexdigest()[:8], 16) % 900000000 + 100000000)
        age = (d - dt.datetime(2012, 1, 1)).days
        self.followed_by = int(200000 + age * (30000 + hash(handle) % 20000 if False else 30000 + int(self.id) % 20000))
        self.follows = local.randint(0, 900)
        self.media = 50 + age // 3 + int(self.id) % 300
        self.bio = local.choice(["", f"Official account of {name}", "#LEMONADE", f"\U0001F30E {name} • links below", "Be kind."])
        self.website = local.choice([None, f"http://www.{handle.replace('.', '')}.com/", f"https://{handle.replace('.', '')}.lnk.to/new"])
        self.verified = d >= dt.datetime(2014, 12, 1) and local.random() < 0.9
        self.pic = f"https://scontent.cdninstagram.com/t51.2885-19/s150x150/{local.randint(10**7, 10**8)}_{local.randint(10**14, 10**15)}_{local.randint(10**8, 10**9)}_a.jpg"


def posts_for(local, d, n, handle):
    out = []
    t = int(d.replace(tzinfo=dt.timezone.utc).timestamp()) - local.randint(3600, 86400)
    for _ in range(n):
        t -= local.randint(20000, 400000)
        img = f"{local.randint(10**7, 10**8)}_{local.randint(10**14, 10**15)}_{local.randint(10**17, 10**18)}_n.jpg"
        out.append({
            "code": shortcode(local, d),
            "caption": caption(local, handle) if local.random() < 0.9 else None,
            "likes": local.randint(1000, 5000000),
            "comments": local.randint(10, 90000),
            "comments_disabled": local.random() < 0.05,
            "created": t,
            "img": img,
            "id": str(local.randint(10**18, 10**19)),
            "is_video": local.random() < 0.15,
        })
    return out


def era_of(day):
    if day < ERA_CHANGES[0]:
        return "jscalls"
    if day < ERA_CHANGES[1]:
        return "shared-data-userprofile"
    if day < ERA_CHANGES[2]:
        return "shared-data-profilepage"
    return "shared-data-graphql"


def v1_media(p):
    base = "http://distilleryimage%d.s3.amazonaws.com/" % (p["created"] % 10) if p["created"] < 1390000000 else "http://scontent-b.cdninstagram.com/hphotos-xfa1/t51.2885-15/"
    m = {
        "attribution": None,
        "tags": [],
        "type": "video" if p["is_video"] else "image",
        "location": None,
        "comments": {"count": p["comments"], "data": []},
        "filter": "Normal",
        "created_time": str(p["created"]),
        "link": f"http://instagram.com/p/{p['code']}/",
        "likes": {"count": p["likes"], "data": []},
        "images": {
            "low_resolution": {"url": base + p["img"].replace("_n", "_6"), "width": 306, "height": 306},
            "thumbnail": {"url": base + p["img"].replace("_n", "_5"), "width": 150, "height": 150},
            "standard_resolution": {"url": base + p["img"].replace("_n", "_7"), "width": 612, "height": 612},
        },
        "users_in_photo": [],
        "caption": None if p["caption"] is None else {"created_time": str(p["created"]), "text": p["caption"], "id": p["id"]},
        "user_has_liked": False,
        "id": p["id"] + "_1",
    }
    return m


def page_jscalls(prof, posts):
    user = {
        "username": prof.handle, "bio": prof.bio, "website": prof.website or "", "profile_picture": prof.pic,
        "full_name": prof.name, "counts": {"media": prof.media, "followed_by": prof.followed_by}, "id": prof.id,
    }
    args = {"prerelease": False, "profileUser": user, "userMedia": [v1_media(p) for p in posts], "moreAvailable": True, "viewer": None}
    calls = [["bluebar", "init", []], ["app/pages/profile/main", "init", [args]]]
    return (f'<script type="text/javascript">window._csrf_token = "{hashlib.md5(prof.handle.encode()).hexdigest()}";\n'
            f"window._jscalls = {slash_json(calls)};</script>")


def page_userprofile(prof, posts):
    user = {
        "username": prof.handle, "bio": prof.bio, "website": prof.website or "", "profile_picture": prof.pic,
        "full_name": prof.name, "counts": {"media": prof.media, "followed_by": prof.followed_by, "follows": prof.follows},
        "id": prof.id,
    }
    if prof.verified:
        user["is_verified"] = True
    shared = {
        "static_root": "//instagramstatic-a.akamaihd.net/bluebar/5829dff",
        "entry_data": {"UserProfile": [{"user": user, "userMedia": [v1_media(p) for p in posts], "moreAvailable": True, "prerelease": False}]},
        "hostname": "instagram.com", "platform": {"is_touch": False, "app_platform": "web"}, "country_code": "US",
    }
    return f'<script type="text/javascript">window._sharedData = {slash_json(shared)};</script>'


def cdn(p, size=None):
    base = "https://scontent.cdninstagram.com/t51.2885-15/"
    return base + (f"s{size}x{size}/" if size else "e35/") + p["img"]


def page_profilepage(prof, posts, d):
    nodes = []
    for p in posts:
        n = {
            "__typename": "GraphVideo" if p["is_video"] else "GraphImage",
            "id": p["id"],
            "comments_disabled": p["comments_disabled"],
            "dimensions": {"height": 1080, "width": 1080},
            "owner": {"id": prof.id},
            "thumbnail_src": p.get("thumb") or cdn(p, 640),
            "is_video": p["is_video"],
            "code": p["code"],
            "date": p["created"],
            "display_src": p.get("display") or cdn(p),
            "comments": {"count": p["comments"]},
            "likes": {"count": p["likes"]},
        }
        if p["caption"] is not None:
            n["caption"] = p["caption"]
        if d >= dt.datetime(2017, 8, 1):
            n["thumbnail_resources"] = [{"src": cdn(p, s), "config_width": s, "config_height": s} for s in (150, 240, 320, 480, 640)]
        nodes.append(n)
    user = {
        "biography": prof.bio or None, "blocked_by_viewer": False, "country_block": False,
        "external_url": prof.website, "followed_by": {"count": prof.followed_by}, "followed_by_viewer": False,
        "follows": {"count": prof.follows}, "follows_viewer": False, "full_name": prof.name,
        "has_blocked_viewer": False, "has_requested_viewer": False, "id": prof.id, "is_private": False,
        "is_verified": prof.verified, "profile_pic_url": prof.pic, "profile_pic_url_hd": prof.pic.replace("s150x150", "s320x320"),
        "requested_by_viewer": False, "username": prof.handle, "connected_fb_page": None,
        "media": {"nodes": nodes, "count": prof.media, "page_info": {"has_next_page": True, "end_cursor": nodes[-1]["id"] if nodes else None}},
    }
    shared = {
        "activity_counts": None, "config": {"csrf_token": hashlib.md5(prof.id.encode()).hexdigest(), "viewer": None},
        "country_code": "US", "language_code": "en", "locale": "en_US",
        "entry_data": {"ProfilePage": [{"logging_page_id": f"profilePage_{prof.id}", "user": user}]},
        "hostname": "www.instagram.com", "platform": "web", "rollout_hash": "8b1a7c3e4f9d", "probably_has_app": False,
        "show_app_install": True,
    }
    return f'<script type="text/javascript">window._sharedData = {ascii_json(shared)};</script>'


def page_graphql(prof, posts):
    edges = []
    for p in posts:
        node = {
            "__typename": "GraphVideo" if p["is_video"] else "GraphImage",
            "id": p["id"],
            "edge_media_to_caption": {"edges": [] if p["caption"] is None else [{"node": {"text": p["caption"]}}]},
            "shortcode": p["code"],
            "edge_media_to_comment": {"count": p["comments"]},
            "comments_disabled": p["comments_disabled"],
            "taken_at_timestamp": p["created"],
            "dimensions": {"height": 1080, "width": 1080},
            "display_url": cdn(p),
            "edge_liked_by": {"count": p["likes"]},
            "edge_media_preview_like": {"count": p["likes"]},
            "owner": {"id": prof.id},
            "thumbnail_src": cdn(p, 640),
            "thumbnail_resources": [{"src": cdn(p, s), "config_width": s, "config_height": s} for s in (150, 240, 320, 480, 640)],
            "is_video": p["is_video"],
        }
        edges.append({"node": node})
    user = {
        "biography": prof.bio, "blocked_by_viewer": False, "country_block": False, "external_url": prof.website,
        "edge_followed_by": {"count": prof.followed_by}, "edge_follow": {"count": prof.follows},
        "full_name": prof.name, "id": prof.id, "is_private": False, "is_verified": prof.verified,
        "profile_pic_url": prof.pic, "profile_pic_url_hd": prof.pic.replace("s150x150", "s320x320"),
        "username": prof.handle,
        "edge_owner_to_timeline_media": {"count": prof.media, "page_info": {"has_next_page": True, "end_cursor": "QVFD"}, "edges": edges},
    }
    shared = {
        "config": {"csrf_token": hashlib.md5(prof.id.encode()).hexdigest(), "viewer": None},
        "country_code": "US", "language_code": "en", "locale": "en_US",
        "entry_data": {"ProfilePage": [{"logging_page_id": f"profilePage_{prof.id}", "show_suggested_profiles": False, "graphql": {"user": user}}]},
        "hostname": "www.instagram.com", "platform": "web", "rollout_hash": "2f3d6a1b9c0e",
    }
    return f'<script type="text/javascript">window._sharedData = {ascii_json(shared)};</script>'


def wrap_page(original, stamp, title, script, blank=False, extra_head=""):
    epoch = str(int(parse_ts(stamp).replace(tzinfo=dt.timezone.utc).timestamp()))
    head = WAYBACK_HEAD.replace("{original}", original).replace("{stamp}", stamp).replace("{epoch}", epoch)
    toolbar = TOOLBAR.replace("{original}", original).replace("{stamp}", stamp).replace("{n}", str(rng.randint(200, 9000)))
    body = '<span id="react-root"></span>' if blank else f'<main class="profile"><h1>{title}</h1><div class="media-grid"></div></main>'
    return (
        "<!DOCTYPE html>\n<html lang=\"en\" class=\"no-js not-logged-in\">\n<head>" + head +
        f'<meta charset="utf-8">\n<title>{title}</title>\n' + extra_head +
        '<link rel="stylesheet" href="https://web.archive.org/web/' + stamp + 'cs_/https://www.instagram.com/static/bundles/base.css" type="text/css">\n'
        "</head>\n<body class=\"\">\n" + toolbar + body + "\n" + script +
        "\n<script type=\"text/javascript\">window.__initialDataLoaded && window.__initialDataLoaded(window._sharedData);</script>\n</body>\n</html>\n"
    )


def render_page(handle, name, stamp, original, prof=None, posts=None, blank=False):
    d = parse_ts(stamp)
    local = random.Random(f"{SEED}-page-{handle}-{stamp}")
    prof = prof or Profile(handle, name, d, local)
    posts = posts if posts is not None else posts_for(local, d, 12, handle)
    era = era_of(d.date())
    if era == "jscalls":
        script = page_jscalls(prof, posts)
    elif era == "shared-data-userprofile":
        script = page_userprofile(prof, posts)
    elif era == "shared-data-profilepage":
        script = page_profilepage(prof, posts, d)
    else:
        script = page_graphql(prof, posts)
    title = f"{prof.name} (@{handle}) • Instagram photos and videos"
    html = wrap_page(original, stamp, title, script, blank=blank)
    truth = {
        "era": era, "username": handle, "followed_by": prof.followed_by, "media": prof.media,
        "follows": None if era == "jscalls" else prof.follows, "posts": len(posts),
        "short_codes": [p["code"] for p in posts],
        "created_times": [p["created"] for p in posts],
    }
    return html, truth


# ---------------------------------------------------------------- main

def main():
    if OUT.exists():
        shutil.rmtree(OUT)
    CASSETTE.mkdir(parents=True)
    LIVE.mkdir(parents=True)
    (OUT / "datasets").mkdir()
    (OUT / "expected").mkdir()
    (OUT / "lists").mkdir()

    cas = Cassette(CASSETTE)
    wayback = Archive("wayback", WB + "/web/", WB_CDX, cas, "replay_wayback")
    arquivo = Archive("arquivo", AQ + "/wayback/", AQ_CDX, cas, "replay_arquivo")

    # Account pages needed by the scrape fixtures get a forced 200 capture.
    months = []
    y, m = 2012, 11
    while (y, m) <= (2018, 6):
        months.append((y, m))
        m += 1
        if m == 13:
            y, m = y + 1, 1
    forced = {h: {} for h, _, _ in TOP25}
    monthly = []
    mrng = random.Random(f"{SEED}-monthly")
    for (y, m) in months:
        handle = mrng.choice([h for h, _, _ in TOP25 if h != "virat.kohli" or y >= 2015])
        first = 7 if (y, m) == (2012, 11) else 1
        last = 8 if (y, m) == (2018, 6) else 28
        d = dt.datetime(y, m, mrng.randint(first, last), mrng.randint(0, 23), mrng.randint(0, 59), mrng.randint(0, 59))
        monthly.append((handle, d))
    boundary = []
    for day in [dt.date(2012, 11, 7)] + [c - dt.timedelta(days=1) for c in ERA_CHANGES] + ERA_CHANGES + [SCRAPE_END]:
        handle = mrng.choice(["natgeo", "selenagomez", "taylorswift", "nike", "instagram"])
        boundary.append((handle, dt.datetime(day.year, day.month, day.day, mrng.randint(0, 23), mrng.randint(0, 59), mrng.randint(0, 59))))
    for handle, d in monthly + boundary:
        forced[handle][ts(d)] = f"https://www.instagram.com/{handle}/" if d >= HTTPS_SWITCH else f"http://instagram.com/{handle}/"
    forced["beyonce"][BEYONCE_TS] = "https://www.instagram.com/beyonce/"
    forced["beyonce"][BEYONCE_TS2] = "https://www.instagram.com/beyonce/"
    trend_jscalls = "20130615081522"
    forced["beyonce"][trend_jscalls] = "http://instagram.com/beyonce/"

    truth_rows = []
    datasets = {}

    def run_dataset(name, accounts, arc, scale, login_start_for, first_login_for=None, forced_for=None):
        per_handle = {}
        for handle, _, count in accounts:
            n = max(1, round(count / scale))
            recs = harvest(arc, handle, n, login_start_for(handle),
                           forced=(forced_for or {}).get(handle),
                           first_login=(first_login_for or {}).get(handle))
            per_handle[handle] = recs
            target = f"www.instagram.com/{handle}/"
            if arc.name == "wayback":
                body = wayback_body(recs)
                cas.add(f"cdx_{arc.name}_{name}", cdx_request(WB_CDX, target), 200, content_type="application/json",
                        body_file=f"bodies/cdx/{arc.name}/{name}/{handle}.json", data=body)
            else:
                body = arquivo_body(recs)
                cas.add(f"cdx_{arc.name}_{name}", cdx_request(AQ_CDX, target), 200, content_type="application/json",
                        body_file=f"bodies/cdx/{arc.name}/{name}/{handle}.jsonl", data=body)
            for r in recs:
                truth_rows.append((arc.name, name, handle, r["timestamp"], r["original"], r["statuscode"], r["label"],
                                   "" if r["hops"] is None else str(r["hops"])))
        datasets[(arc.name, name)] = per_handle
        return per_handle

    top = run_dataset("top25", TOP25, wayback, SCALE, lambda h: LOGIN_START, forced_for=forced)
    run_dataset("health_authorities", HEALTH, wayback, 1, lambda h: LOGIN_START,
                first_login_for={"thisisbillgates": FIRST_LOGIN})
    # Arquivo holds far fewer captures; spread its total over the same handles.
    total = sum(c for _, _, c in TOP25)
    aq_accounts = [(h, n, max(1, round(c * ARQUIVO_TOTAL / total))) for h, n, c in TOP25]
    run_dataset("top25", aq_accounts, arquivo, SCALE, lambda h: LOGIN_START)

    # A paged listing of one account, as served with limit=50.
    nike = sorted(top["nike"], key=lambda r: (urlkey(r["original"]), r["timestamp"]))
    pages = [nike[i:i + 50] for i in range(0, len(nike), 50)]
    resume = None
    for i, page in enumerate(pages):
        params = {"limit": "50", "showResumeKey": "true"}
        if resume:
            params["resumeKey"] = resume
        nxt = None
        if i + 1 < len(pages):
            last = page[-1]
            nxt = f"{urlkey(last['original'])} {last['timestamp']}".replace(",", "%2C").replace(")", "%29").replace("/", "%2F").replace(" ", "+")
        cas.add("cdx_wayback_paged", cdx_request(WB_CDX, "www.instagram.com/nike/", **params), 200,
                content_type="application/json", body_file=f"bodies/cdx/wayback/paged/nike_{i + 1}.json",
                data=wayback_body(None, page=[*map(lambda r: r, page)], resume=nxt))
        resume = nxt

    # Captures of the login page itself.
    aug = {}
    rng_login = random.Random(f"{SEED}-login")
    for day in range(1, 32):
        if day <= 20:
            c = rng_login.randint(4, 16)
        elif day == 21:
            c = 262
        else:
            c = rng_login.randint(215, 300)
        aug[dt.date(2019, 8, day)] = c
    # Later days must not out-jump 20 -> 21.
    days = sorted(aug)
    for a, b in zip(days[21:], days[22:]):
        if aug[b] - aug[a] >= aug[days[20]] - aug[days[19]]:
            aug[b] = aug[a] + 40

    def login_records(counts, local):
        out = []
        for day, c in sorted(counts.items()):
            secs = sorted(local.sample(range(86400), c))
            for s in secs:
                t = dt.datetime(day.year, day.month, day.day) + dt.timedelta(seconds=s)
                orig = local.choice(["https://www.instagram.com/accounts/login/", "https://www.instagram.com/accounts/login/?next=/",
                                     "https://www.instagram.com/accounts/login/?hl=en", "http://instagram.com/accounts/login/"])
                out.append({"timestamp": ts(t), "original": orig, "mimetype": "text/html",
                            "statuscode": "200", "digest": sha1_b32(f"login-{day}-{s % 5}"), "length": str(local.randint(5000, 9000))})
        return out

    login_aug = login_records(aug, rng_login)
    lq = {"from": "20190801000000", "to": "20190831235959"}
    cas.add("cdx_wayback_login", cdx_request(WB_CDX, "www.instagram.com/accounts/login", **lq), 200,
            content_type="application/json", body_file="bodies/cdx/wayback/login_2019_08.json", data=wayback_body(login_aug))
    # Unbounded listing: sparse captures around the August slice.
    other = {}
    d = dt.date(2013, 1, 1)
    while d < dt.date(2023, 6, 1):
        if not (dt.date(2019, 8, 1) <= d <= dt.date(2019, 8, 31)) and rng_login.random() < 0.25:
            other[d] = rng_login.randint(1, 3) if d.year < 2019 else rng_login.randint(20, 60)
        d += dt.timedelta(days=1)
    login_all = login_records(other, rng_login) + login_aug
    cas.add("cdx_wayback_login", cdx_request(WB_CDX, "www.instagram.com/accounts/login"), 200,
            content_type="application/json", body_file="bodies/cdx/wayback/login_all.json", data=wayback_body(login_all))
    aq_aug = {day: (max(0, c // 12) if day.day != 21 else 30) for day, c in aug.items()}
    for day in aq_aug:
        if day.day <= 20:
            aq_aug[day] = rng_login.randint(0, 2)
        elif day.day > 21:
            aq_aug[day] = rng_login.randint(14, 26)
    aq_login = login_records(aq_aug, rng_login)
    cas.add("cdx_arquivo_login", cdx_request(AQ_CDX, "www.instagram.com/accounts/login", **lq), 200,
            content_type="application/json", body_file="bodies/cdx/arquivo/login_2019_08.jsonl", data=arquivo_body(aq_login))

    # ------------------------------------------------------------ pages
    scrape_truth = []
    pages_index = "pages"
    names = {h: n for h, n, _ in TOP25}

    def add_page(handle, d_stamp, original, html_or_bytes, truth=None, kind="account"):
        urim = wayback.urim(d_stamp, original)
        file = f"bodies/pages/{handle}_{d_stamp}.html"
        cas.add(pages_index, urim, 200, content_type="text/html; charset=utf-8", body_file=file, data=html_or_bytes)
        if truth is not None:
            scrape_truth.append({"urim": urim, "kind": kind, **truth})
        return urim

    monthly_urims = []
    for i, (handle, d) in enumerate(monthly):
        stamp = ts(d)
        original = forced[handle][stamp]
        html, truth = render_page(handle, names[handle], stamp, original)
        data = html
        if i == 17:
            # One capture carries a stray Latin-1 byte outside the data block.
            data = html.replace("<meta charset=\"utf-8\">", "<meta name=\"description\" content=\"café\">").encode("utf-8")
            data = data.replace("café".encode("utf-8"), b"caf\xe9", 1)
            truth["replaced_bytes"] = 1
        monthly_urims.append(add_page(handle, stamp, original, data, truth, kind="monthly"))
    boundary_urims = []
    for handle, d in boundary:
        stamp = ts(d)
        original = forced[handle][stamp]
        html, truth = render_page(handle, names[handle], stamp, original)
        boundary_urims.append(add_page(handle, stamp, original, html, truth, kind="boundary"))

    # The beyonce capture with known values, and a later one.
    beyonce = Profile("beyonce", "Beyoncé", parse_ts(BEYONCE_TS), random.Random(1))
    beyonce.bio, beyonce.website, beyonce.pic = "#LEMONADE", "http://www.beyonce.com/", BEYONCE_PIC
    beyonce.media, beyonce.followed_by, beyonce.follows, beyonce.verified = 1403, 94709950, 0, True
    blocal = random.Random(f"{SEED}-beyonce")
    bposts = posts_for(blocal, parse_ts(BEYONCE_TS), 11, "beyonce")
    first = {"code": "BP-rXUGBPJa", "caption": BEYONCE_CAPTION + " \U0001F339\U0001F41D", "likes": 10400019, "comments": 504384,
             "comments_disabled": False, "created": 1485974340, "img": "16465013_1625467001093055_3757710872030478336_n.jpg",
             "id": "1440779648928903770", "is_video": False, "display": BEYONCE_DISPLAY}
    bposts = [first] + bposts
    # Fig. 13 keeps the exact caption text; the fixture caption is that text.
    first["caption"] = BEYONCE_CAPTION
    html, truth = render_page("beyonce", "Beyoncé", BEYONCE_TS, "https://www.instagram.com/beyonce/", prof=beyonce, posts=bposts)
    beyonce_urim = add_page("beyonce", BEYONCE_TS, "https://www.instagram.com/beyonce/", html, truth, kind="golden")
    b2 = Profile("beyonce", "Beyoncé", parse_ts(BEYONCE_TS2), random.Random(2))
    b2.bio, b2.website, b2.pic = "#LEMONADE", "http://www.beyonce.com/", BEYONCE_PIC
    b2.media, b2.followed_by, b2.follows, b2.verified = 1410, 95000000, 0, True
    b2posts = [dict(first, likes=10871325, comments=522101)] + posts_for(random.Random(f"{SEED}-beyonce2"), parse_ts(BEYONCE_TS2), 5, "beyonce")
    html2, truth2 = render_page("beyonce", "Beyoncé", BEYONCE_TS2, "https://www.instagram.com/beyonce/", prof=b2, posts=b2posts)
    beyonce2_urim = add_page("beyonce", BEYONCE_TS2, "https://www.instagram.com/beyonce/", html2, truth2, kind="trend")
    html3, truth3 = render_page("beyonce", "Beyoncé", trend_jscalls, "http://instagram.com/beyonce/")
    beyonce3_urim = add_page("beyonce", trend_jscalls, "http://instagram.com/beyonce/", html3, truth3, kind="trend")

    # Image replays for both beyonce captures: rewritten URL -> im_ -> 200,
    # except thumbnails, which were never archived.
    def image_exchanges(stamp, prof, posts):
        ok = [prof.pic] + [p.get("display") or cdn(p) for p in posts]
        missing = [p.get("thumb") or cdn(p, 640) for p in posts]
        if parse_ts(stamp) >= dt.datetime(2017, 8, 1):
            missing += [cdn(p, s) for p in posts for s in (150, 240, 320, 480, 640)]
        for u in ok:
            start = wayback.urim(stamp, u)
            im = wayback.urim(stamp, u, modifier="im_")
            cas.add("images", start, 302, location=im, content_type="text/html")
            cas.add("images", im, 200, content_type="image/jpeg", body="")
        for u in missing:
            cas.add("images", wayback.urim(stamp, u), 404, content_type="text/html", body="")

    image_exchanges(BEYONCE_TS, beyonce, bposts)
    image_exchanges(BEYONCE_TS2, b2, b2posts)
    # The jscalls-era capture: the picture and standard-resolution images
    # were archived, the smaller variants were not.
    for u in sorted(set(re.findall(r'https?:[^"]*?\.jpg', html3.replace("\\/", "/")))):
        start = wayback.urim(trend_jscalls, u)
        if u.endswith("_7.jpg") or "/t51.2885-19/" in u:
            im = wayback.urim(trend_jscalls, u, modifier="im_")
            cas.add("images", start, 302, location=im, content_type="text/html")
            cas.add("images", im, 200, content_type="image/jpeg", body="")
        else:
            cas.add("images", start, 404, content_type="text/html", body="")

    # Special pages.
    sel = Profile("selenagomez", "Selena Gomez", dt.datetime(2016, 9, 3), random.Random(3))
    blank_stamp = "20160903021145"
    blank_html, blank_truth = render_page("selenagomez", "Selena Gomez", blank_stamp, "https://www.instagram.com/selenagomez/", prof=sel, blank=True)
    blank_urim = add_page("selenagomez", blank_stamp, "https://www.instagram.com/selenagomez/", blank_html, blank_truth, kind="blank")

    trunc_stamp = "20161105173320"
    full, _ = render_page("natgeo", "National Geographic", trunc_stamp, "https://www.instagram.com/natgeo/")
    cut = full.index('"media":{"nodes":') + 900
    trunc_urim = add_page("natgeo", trunc_stamp, "https://www.instagram.com/natgeo/", full[:cut],
                          {"error": "MalformedEmbeddedData", "cut_at": cut}, kind="truncated")

    unsup_stamp = "20190310120405"
    unsup_html = wrap_page("https://www.instagram.com/natgeo/", unsup_stamp, "National Geographic (@natgeo) • Instagram photos and videos",
                           '<script type="text/javascript">window.__bufferedData = {"user":{"username":"natgeo"}};</script>')
    unsup_urim = add_page("natgeo", unsup_stamp, "https://www.instagram.com/natgeo/", unsup_html,
                          {"error": "UnsupportedFormat"}, kind="unsupported")

    login_stamp = "20200315101010"
    login_html = wrap_page("https://www.instagram.com/kyliejenner/", login_stamp, "Login • Instagram",
                           '<script type="text/javascript">window._sharedData = {"entry_data":{"LoginAndSignupPage":[{"captcha":{"enabled":false}}]},"hostname":"www.instagram.com"};</script>')
    login_body_urim = add_page("kyliejenner", login_stamp, "https://www.instagram.com/kyliejenner/", login_html,
                               {"error": "LoginPageContent"}, kind="login")
    # A login-era capture that redirects on replay.
    login_redirect = next(r for r in top["kyliejenner"] if r["label"] == "redirect_login")
    login_redirect_urim = wayback.urim(login_redirect["timestamp"], login_redirect["original"])
    scrape_truth.append({"urim": login_redirect_urim, "kind": "login_redirect", "error": "LoginPageContent"})

    # ------------------------------------------------------------ probe
    probe_targets = {
        "www.instagram.com/accounts/login": None,  # listed above
        "instagram.com/p/BP-rXUGBPJa/": [("20170202001512", "200"), ("20170302110000", "200"), ("20200102030405", "302")],
        "http://www.beyonce.com/": [("2016010%d101010" % i, "200") for i in range(1, 6)],
        "instagram.com/p/BQmsgEwhC5H/": [("20170215000000", "302"), ("20210101000000", "404")],
        "https://scontent-sea1-1.cdninstagram.com/never-archived.jpg": [],
        "instagram.com/p/Bdeleted0001/": [],
    }
    for target, rows in probe_targets.items():
        if rows is None:
            continue
        recs = [{"timestamp": s, "original": ("https://www." + target if not target.startswith("http") else target).replace("www.instagram.com", "www.instagram.com"),
                 "mimetype": "text/html", "statuscode": st, "digest": sha1_b32(target + s), "length": "1000"} for s, st in rows]
        body = wayback_body(recs) if recs else ""
        cas.add("cdx_wayback_probe", cdx_request(WB_CDX, target), 200, content_type="application/json", body=body)
    live = Cassette(LIVE)
    live.add("live", "https://instagram.com/p/BP-rXUGBPJa/", 301, location="https://www.instagram.com/p/BP-rXUGBPJa/")
    live.add("live", "https://www.instagram.com/p/BP-rXUGBPJa/", 200, content_type="text/html", body="")
    live.add("live", "https://www.instagram.com/accounts/login", 200, content_type="text/html", body="")
    live.add("live", "http://www.beyonce.com/", 200, content_type="text/html", body="")
    live.add("live", "https://instagram.com/p/BQmsgEwhC5H/", 410, content_type="text/html", body="")
    live.add("live", "https://scontent-sea1-1.cdninstagram.com/never-archived.jpg", 403, content_type="text/html", body="")
    live.add("live", "https://instagram.com/p/Bdeleted0001/", 404, content_type="text/html", body="")
    live.write()

    cas.write()

    # ------------------------------------------------------------ lists + truth
    (OUT / "datasets" / "health_authorities.txt").write_text(
        "# Public-health accounts, synthetic capture history\n" + "\n".join(h for h, _, _ in HEALTH) + "\n")
    (OUT / "lists" / "monthly.txt").write_text("\n".join(monthly_urims) + "\n")
    (OUT / "lists" / "boundary.txt").write_text("\n".join(boundary_urims) + "\n")
    (OUT / "lists" / "trend_beyonce.txt").write_text("\n".join([beyonce3_urim, beyonce_urim, beyonce2_urim]) + "\n")
    (OUT / "lists" / "scrape_batch.txt").write_text("\n".join([beyonce_urim, blank_urim, unsup_urim, monthly_urims[30]]) + "\n")
    (OUT / "lists" / "probe_urls.txt").write_text("\n".join(probe_targets) + "\n")

    with open(OUT / "expected" / "classes.csv", "w", encoding="utf-8") as f:
        f.write("endpoint,dataset,handle,timestamp,original,status,label,hops\n")
        for row in truth_rows:
            f.write(",".join(row) + "\n")

    def monthly_stats(per_handle):
        out = {}
        for recs in per_handle.values():
            for r in recs:
                month = f"{r['timestamp'][:4]}-{r['timestamp'][4:6]}"
                s = out.setdefault(month, {"num": 0, "den": 0})
                lab = r["label"]
                if lab == "success":
                    s["num"] += 1
                    s["den"] += 1
                elif lab.startswith("revisit:"):
                    s["den"] += 1
                    if lab == "revisit:success":
                        s["num"] += 1
                elif lab == "redirect_login" or lab.startswith("client_error") or lab.startswith("server_error"):
                    s["den"] += 1
        return dict(sorted(out.items()))

    first_logins = sorted((r["timestamp"], h) for (_, name), per in datasets.items() for h, recs in per.items()
                          for r in recs if r["label"] == "redirect_login" and _ == "wayback")
    jumps = [(aug[b] - aug[a], a, b) for a, b in zip(days, days[1:])]
    best = max(jumps, key=lambda j: (j[0], -j[1].toordinal()))
    summary = {
        "seed": SEED,
        "scale": SCALE,
        "records": {f"{e}/{n}": sum(len(v) for v in per.values()) for (e, n), per in datasets.items()},
        "per_handle": {f"{e}/{n}": {h: len(v) for h, v in per.items()} for (e, n), per in datasets.items()},
        "monthly_replayability": {f"{e}/{n}": monthly_stats(per) for (e, n), per in datasets.items()},
        "first_login_redirect": {"timestamp": first_logins[0][0], "handle": first_logins[0][1]},
        "login_slice": {"counts": {str(k): v for k, v in sorted(aug.items())},
                        "max_jump": {"from": str(best[1]), "to": str(best[2]), "increase": best[0]}},
        "arquivo_login_slice": {str(k): v for k, v in sorted(aq_aug.items())},
        "login_listing_total": len(login_all),
        "paged": {"handle": "nike", "pages": len(pages), "records": len(nike)},
        "scrapes": scrape_truth,
        "beyonce": {"golden": beyonce_urim, "later": beyonce2_urim, "early": beyonce3_urim},
        "special": {"blank": blank_urim, "truncated": trunc_urim, "unsupported": unsup_urim,
                    "login_body": login_body_urim, "login_redirect": login_redirect_urim},
    }
    with open(OUT / "expected" / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=1, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    print(json.dumps(summary["records"]), "first login", summary["first_login_redirect"], "jump", summary["login_slice"]["max_jump"])


if __name__ == "__main__":
    main()
