//! Client for external fill/embed services speaking newline-delimited JSON.
//!
//! Requests:
//!
//! ```text
//! {"op":"fill","tokens":[...],"masked_positions":[...],"k":20}
//! {"op":"embed","texts":[...]}
//! ```
//!
//! Responses, one line per request and in request order:
//!
//! ```text
//! {"candidates":[[{"token":"...","score":-0.1}, ...], ...]}
//! {"vectors":[[0.1, ...], ...]}
//! {"error":"message"}
//! ```
//!
//! The service may run as a subprocess (`stdio:<command>`) or listen on
//! TCP (`tcp://host:port` or `host:port`). One request is in flight per
//! connection; the client serializes callers behind a mutex.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backend::{normalize_candidates, BackendError, Candidate, EmbedBackend, FillBackend};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Stdio(Vec<String>),
}

impl FromStr for Endpoint {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(cmd) = s.strip_prefix("stdio:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(BackendError::InvalidRequest("empty stdio command".into()));
            }
            return Ok(Endpoint::Stdio(argv));
        }
        let addr = s.strip_prefix("tcp://").unwrap_or(s);
        if addr
            .rsplit_once(':')
            .is_none_or(|(host, port)| host.is_empty() || port.parse::<u16>().is_err())
        {
            return Err(BackendError::InvalidRequest(format!(
                "endpoint {s:?} is neither host:port nor stdio:<command>"
            )));
        }
        Ok(Endpoint::Tcp(addr.to_string()))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Tcp(addr) => write!(f, "tcp://{addr}"),
            Endpoint::Stdio(argv) => write!(f, "stdio:{}", argv.join(" ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum WireRequest {
    Fill {
        tokens: Vec<String>,
        masked_positions: Vec<usize>,
        k: usize,
    },
    Embed {
        texts: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireResponse {
    Error { error: String },
    Candidates { candidates: Vec<Vec<WireCandidate>> },
    Vectors { vectors: Vec<Vec<f64>> },
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Connection {
    fn open(endpoint: &Endpoint) -> Result<Self, BackendError> {
        match endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)?;
                stream.set_nodelay(true)?;
                let reader = BufReader::new(stream.try_clone()?);
                Ok(Self {
                    reader: Box::new(reader),
                    writer: Box::new(BufWriter::new(stream)),
                    child: None,
                })
            }
            Endpoint::Stdio(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Self {
                    reader: Box::new(BufReader::new(stdout)),
                    writer: Box::new(BufWriter::new(stdin)),
                    child: Some(child),
                })
            }
        }
    }

    fn round_trip(&mut self, request: &WireRequest) -> Result<WireResponse, BackendError> {
        let line =
            serde_json::to_string(request).map_err(|e| BackendError::Protocol(e.to_string()))?;
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(BackendError::Protocol(
                "connection closed by backend".into(),
            ));
        }
        serde_json::from_str(reply.trim_end())
            .map_err(|e| BackendError::Protocol(format!("bad response line: {e}")))
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

struct State {
    conn: Connection,
    dimension: Option<usize>,
}

pub struct ExternalBackend {
    endpoint: Endpoint,
    state: Mutex<State>,
}

impl ExternalBackend {
    pub fn connect(endpoint: Endpoint) -> Result<Self, BackendError> {
        let conn = Connection::open(&endpoint)?;
        Ok(Self {
            endpoint,
            state: Mutex::new(State {
                conn,
                dimension: None,
            }),
        })
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    fn call(&self, request: &WireRequest) -> Result<(WireResponse, Option<usize>), BackendError> {
        let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let response = state.conn.round_trip(request)?;
        if let WireResponse::Vectors { vectors } = &response {
            if let Some(first) = vectors.first() {
                let dim = *state.dimension.get_or_insert(first.len());
                if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
                    return Err(BackendError::Protocol(format!(
                        "vector dimension {} differs from {dim}",
                        bad.len()
                    )));
                }
            }
        }
        Ok((response, state.dimension))
    }
}

fn unexpected(response: WireResponse, wanted: &str) -> BackendError {
    match response {
        WireResponse::Error { error } => BackendError::Remote(error),
        _ => BackendError::Protocol(format!("expected a {wanted} response")),
    }
}

impl FillBackend for ExternalBackend {
    fn fill(
        &self,
        tokens: &[String],
        masked_positions: &[usize],
        k: usize,
    ) -> Result<Vec<Vec<Candidate>>, BackendError> {
        let request = WireRequest::Fill {
            tokens: tokens.to_vec(),
            masked_positions: masked_positions.to_vec(),
            k,
        };
        let candidates = match self.call(&request)?.0 {
            WireResponse::Candidates { candidates } => candidates,
            other => return Err(unexpected(other, "candidates")),
        };
        if candidates.len() != masked_positions.len() {
            return Err(BackendError::Protocol(format!(
                "{} candidate lists for {} masked positions",
                candidates.len(),
                masked_positions.len()
            )));
        }
        candidates
            .into_iter()
            .map(|list| {
                let list = list
                    .into_iter()
                    .map(|c| Candidate {
                        token: c.token,
                        score: c.score,
                        padded: false,
                    })
                    .collect();
                normalize_candidates(list, k)
            })
            .collect()
    }
}

impl EmbedBackend for ExternalBackend {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        let request = WireRequest::Embed {
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        match self.call(&request)?.0 {
            WireResponse::Vectors { vectors } if vectors.len() == texts.len() => Ok(vectors),
            WireResponse::Vectors { vectors } => Err(BackendError::Protocol(format!(
                "{} vectors for {} texts",
                vectors.len(),
                texts.len()
            ))),
            other => Err(unexpected(other, "vectors")),
        }
    }

    fn describe(&self) -> String {
        format!("external:{}", self.endpoint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_endpoints() {
        assert_eq!(
            "127.0.0.1:9000".parse::<Endpoint>().unwrap(),
            Endpoint::Tcp("127.0.0.1:9000".into())
        );
        assert_eq!(
            "tcp://localhost:7".parse::<Endpoint>().unwrap(),
            Endpoint::Tcp("localhost:7".into())
        );
        assert_eq!(
            "stdio:python3 serve.py --stdio"
                .parse::<Endpoint>()
                .unwrap(),
            Endpoint::Stdio(vec!["python3".into(), "serve.py".into(), "--stdio".into()])
        );
        assert!("nonsense".parse::<Endpoint>().is_err());
        assert!("host:notaport".parse::<Endpoint>().is_err());
        assert!("stdio:".parse::<Endpoint>().is_err());
    }

    #[test]
    fn request_wire_shape() {
        let fill = WireRequest::Fill {
            tokens: vec!["a".into(), "b".into()],
            masked_positions: vec![1],
            k: 20,
        };
        assert_eq!(
            serde_json::to_string(&fill).unwrap(),
            r#"{"op":"fill","tokens":["a","b"],"masked_positions":[1],"k":20}"#
        );
        let embed = WireRequest::Embed {
            texts: vec!["x".into()],
        };
        assert_eq!(
            serde_json::to_string(&embed).unwrap(),
            r#"{"op":"embed","texts":["x"]}"#
        );
    }

    #[test]
    fn response_variants_parse() {
        let r: WireResponse = serde_json::from_str(r#"{"error":"bad"}"#).unwrap();
        assert_eq!(
            r,
            WireResponse::Error {
                error: "bad".into()
            }
        );
        let r: WireResponse = serde_json::from_str(r#"{"vectors":[[1.0,2.0]]}"#).unwrap();
        assert_eq!(
            r,
            WireResponse::Vectors {
                vectors: vec![vec![1.0, 2.0]]
            }
        );
        let r: WireResponse =
            serde_json::from_str(r#"{"candidates":[[{"token":"x","score":-0.5}]]}"#).unwrap();
        assert!(matches!(r, WireResponse::Candidates { .. }));
    }
}
