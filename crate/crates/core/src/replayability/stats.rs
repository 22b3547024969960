use std::ops::{Add, AddAssign};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::classifier::{MementoClass, RevisitResolution};

/// Counters behind the percentage-replayable measure.
///
/// ```text
///                     200s + revisits to 200s
/// replayable % = ------------------------------------------------ x 100
///                200s + revisits + 3xx to login + 4xx + 5xx
/// ```
///
/// Canonicalization and other redirects are counted in `excluded_redirects`
/// and enter neither side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReplayabilityStats {
    pub n_success: u64,
    pub n_revisit: u64,
    pub n_revisit_success: u64,
    pub n_login_redirect: u64,
    pub n_client_error: u64,
    pub n_server_error: u64,
    pub excluded_redirects: u64,
    /// Revisits that resolved to a canonical or other redirect. Already part
    /// of `n_revisit`; kept so alternate readings can be derived.
    #[serde(default)]
    pub n_revisit_excluded_redirect: u64,
}

impl ReplayabilityStats {
    pub fn record(&mut self, class: &MementoClass) {
        match class {
            MementoClass::Success => self.n_success += 1,
            MementoClass::RedirectToLogin { .. } => self.n_login_redirect += 1,
            MementoClass::RedirectCanonical { .. } | MementoClass::RedirectOther { .. } => {
                self.excluded_redirects += 1
            }
            MementoClass::ClientError { .. } => self.n_client_error += 1,
            MementoClass::ServerError { .. } => self.n_server_error += 1,
            MementoClass::Revisit { resolution } => {
                self.n_revisit += 1;
                match resolution {
                    RevisitResolution::Success => self.n_revisit_success += 1,
                    RevisitResolution::RedirectCanonical { .. } | RevisitResolution::RedirectOther { .. } => {
                        self.n_revisit_excluded_redirect += 1
                    }
                    _ => {}
                }
            }
        }
    }

    pub fn from_classes<'a>(classes: impl IntoIterator<Item = &'a MementoClass>) -> Self {
        let mut s = Self::default();
        for c in classes {
            s.record(c);
        }
        s
    }

    pub fn numerator(&self) -> u64 {
        self.n_success + self.n_revisit_success
    }

    pub fn denominator(&self) -> u64 {
        self.n_success + self.n_revisit + self.n_login_redirect + self.n_client_error + self.n_server_error
    }

    pub fn total(&self) -> u64 {
        self.denominator() + self.excluded_redirects
    }

    /// Exact replayable fraction; `None` when the denominator is zero.
    pub fn replayable_fraction(&self) -> Option<Ratio<u64>> {
        let d = self.denominator();
        (d > 0).then(|| Ratio::new(self.numerator(), d))
    }

    pub fn is_consistent(&self) -> bool {
        self.n_revisit_success + self.n_revisit_excluded_redirect <= self.n_revisit
    }
}

/// Percentage in `[0, 100]`, or `None` for an empty denominator.
pub fn percentage_replayable(stats: &ReplayabilityStats) -> Option<f64> {
    let d = stats.denominator();
    (d > 0).then(|| 100.0 * stats.numerator() as f64 / d as f64)
}

impl AddAssign for ReplayabilityStats {
    fn add_assign(&mut self, o: Self) {
        self.n_success += o.n_success;
        self.n_revisit += o.n_revisit;
        self.n_revisit_success += o.n_revisit_success;
        self.n_login_redirect += o.n_login_redirect;
        self.n_client_error += o.n_client_error;
        self.n_server_error += o.n_server_error;
        self.excluded_redirects += o.excluded_redirects;
        self.n_revisit_excluded_redirect += o.n_revisit_excluded_redirect;
    }
}

impl Add for ReplayabilityStats {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}
