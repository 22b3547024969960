//! Blocking HTTP transport over ureq. Redirects are returned, not followed.

use std::time::Duration;

use mementolens::{HttpResponse, Transport, TransportError};

const BODY_LIMIT: u64 = 64 * 1024 * 1024;

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .max_redirects(0)
            .max_redirects_will_error(false)
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent(format!("mementolens/{} (research crawler)", mementolens::VERSION))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let fail = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout { url: url.to_string() },
            other => TransportError::Connect {
                url: url.to_string(),
                reason: other.to_string(),
            },
        };
        let mut resp = self.agent.get(url).call().map_err(fail)?;
        let header = |name: &str| {
            resp.headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        };
        let status = resp.status().as_u16();
        let location = header("location");
        let content_type = header("content-type");
        let body = resp
            .body_mut()
            .with_config()
            .limit(BODY_LIMIT)
            .read_to_vec()
            .map_err(fail)?;
        Ok(HttpResponse {
            status,
            location,
            content_type,
            body,
        })
    }
}
