use std::time::Duration;

use reqwest::header::ACCEPT;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("GET {url}: HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("GET {url}: timed out")]
    Timeout { url: String },
    #[error("GET {url}: {message}")]
    Network { url: String, message: String },
}

impl TransportError {
    /// Server errors and timeouts are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Status { status, .. } => *status >= 500,
            TransportError::Timeout { .. } => true,
            TransportError::Network { .. } => false,
        }
    }
}

/// Fetches a URL and returns the response body of a 2xx answer.
pub trait Transport: Sync {
    fn get(&self, url: &str) -> Result<String, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        (**self).get(url)
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .expect("HTTP client");
        HttpTransport { client }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                TransportError::Timeout { url: url.to_string() }
            } else {
                TransportError::Network {
                    url: url.to_string(),
                    message: e.to_string(),
                }
            }
        };
        let response = self
            .client
            .get(url)
            .header(ACCEPT, "application/json")
            .send()
            .map_err(classify)?;
        let status = response.status();
        if !status.is_success() {
            return Err(TransportError::Status {
                url: url.to_string(),
                status: status.as_u16(),
            });
        }
        response.text().map_err(classify)
    }
}

/// Bounded attempts with doubling delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub first_delay: Duration,
}

impl Default for RetryPolicy {
    /// Three attempts, waiting 0.5 s and then 1 s between them.
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            first_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            first_delay: Duration::ZERO,
        }
    }

    /// Delay before attempt `n` (1-based, n ≥ 2).
    pub fn delay_before(&self, n: u32) -> Duration {
        self.first_delay * 2u32.saturating_pow(n.saturating_sub(2))
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or
    /// attempts run out. Returns the last error and the attempt count.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, TransportError>,
    ) -> Result<T, (TransportError, u32)> {
        let mut attempt = 1;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.max_attempts => {
                    attempt += 1;
                    tracing::warn!(error = %e, attempt, "retrying");
                    std::thread::sleep(self.delay_before(attempt));
                }
                Err(e) => return Err((e, attempt)),
            }
        }
    }
}
