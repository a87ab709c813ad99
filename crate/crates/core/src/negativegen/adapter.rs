//! Client side of the external fill-generator protocol.
//!
//! Each request is one JSON object: `{"id", "template", "m"}` where the
//! template mixes plain tokens with `{"sentinel": n}` markers. The generator
//! answers with `{"id", "candidates": [{"fills": [[..], ..], "score"}]}`.
//! Transport is either line-delimited JSON over a child process's stdio or an
//! HTTP POST.

use super::spans::{FillCandidate, MaskedTemplate, Piece};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub id: usize,
    pub template: Vec<Piece>,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub id: usize,
    pub candidates: Vec<FillCandidate>,
}

/// A generator reachable over some transport. One request in flight at a time.
pub trait ExternalGenerator {
    fn request(&mut self, req: &AdapterRequest) -> Result<AdapterResponse>;
}

/// Talks to a child process over stdin/stdout, one JSON object per line.
pub struct ProcessAdapter {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl ProcessAdapter {
    /// Spawns `command` through the shell.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Adapter(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ProcessAdapter {
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }
}

impl ExternalGenerator for ProcessAdapter {
    fn request(&mut self, req: &AdapterRequest) -> Result<AdapterResponse> {
        let mut line = serde_json::to_string(req)?;
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Adapter(format!("write to generator failed: {e}")))?;
        let reply = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(Error::Adapter(format!("read from generator failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Adapter(format!(
                    "no reply for request {} within {:?}",
                    req.id, self.timeout
                )))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Adapter("generator closed its output".into()))
            }
        };
        serde_json::from_str(&reply)
            .map_err(|e| Error::Adapter(format!("malformed reply {reply:?}: {e}")))
    }
}

impl Drop for ProcessAdapter {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// POSTs each request as JSON to a fixed URL.
pub struct HttpAdapter {
    agent: ureq::Agent,
    url: String,
}

impl HttpAdapter {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        HttpAdapter {
            agent: config.into(),
            url: url.into(),
        }
    }
}

impl ExternalGenerator for HttpAdapter {
    fn request(&mut self, req: &AdapterRequest) -> Result<AdapterResponse> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(serde_json::to_string(req)?)
            .map_err(|e| Error::Adapter(format!("POST {} failed: {e}", self.url)))?;
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Adapter(format!("reading reply failed: {e}")))?;
        serde_json::from_str(&body)
            .map_err(|e| Error::Adapter(format!("malformed reply {body:?}: {e}")))
    }
}

/// Asks the external generator for `m` fills and validates the reply.
/// Identity fills are dropped; the rest are returned best first.
pub fn external_generate(
    template: &MaskedTemplate,
    adapter: &mut dyn ExternalGenerator,
    m: usize,
) -> Result<Vec<FillCandidate>> {
    if m == 0 {
        return Err(Error::Config(
            "number of negatives must be at least 1".into(),
        ));
    }
    if template.sentinel_count() == 0 {
        return Err(Error::invalid(format!(
            "sentence {} has no masked span to fill",
            template.base.id
        )));
    }
    let req = AdapterRequest {
        id: template.base.id,
        template: template.pieces(),
        m,
    };
    let resp = adapter.request(&req)?;
    if resp.id != req.id {
        return Err(Error::Adapter(format!(
            "reply id {} does not match request id {}",
            resp.id, req.id
        )));
    }
    if resp.candidates.is_empty() {
        return Err(Error::Adapter(format!(
            "empty reply for request {}",
            req.id
        )));
    }
    let mut out = Vec::new();
    for (i, cand) in resp.candidates.into_iter().enumerate() {
        if cand.fills.len() != template.sentinel_count() {
            return Err(Error::Adapter(format!(
                "candidate {i} has {} fill(s) for {} sentinel(s)",
                cand.fills.len(),
                template.sentinel_count()
            )));
        }
        if cand.fills.iter().any(|f| f.is_empty()) || !cand.score.is_finite() {
            return Err(Error::Adapter(format!(
                "candidate {i} has an empty fill or non-finite score"
            )));
        }
        if !cand.is_identity(template) {
            out.push(cand);
        }
    }
    if out.is_empty() {
        return Err(Error::NoCandidate(format!(
            "generator only proposed the original spans for sentence {}",
            req.id
        )));
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out.truncate(m);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TaggedSentence;
    use crate::negativegen::spans::noun_template;
    use crate::pos::Pos::*;

    struct Canned(Vec<AdapterResponse>);

    impl ExternalGenerator for Canned {
        fn request(&mut self, _req: &AdapterRequest) -> Result<AdapterResponse> {
            if self.0.is_empty() {
                return Err(Error::Adapter("exhausted".into()));
            }
            Ok(self.0.remove(0))
        }
    }

    fn template() -> MaskedTemplate {
        noun_template(&TaggedSentence::from_pairs(
            4,
            &[("the", Det), ("dog", Noun), ("barked", Verb)],
        ))
    }

    fn cand(fill: &str, score: f64) -> FillCandidate {
        FillCandidate {
            fills: vec![vec![fill.to_string()]],
            score,
        }
    }

    #[test]
    fn filters_identity_and_sorts() {
        let mut g = Canned(vec![AdapterResponse {
            id: 4,
            candidates: vec![cand("cat", -2.0), cand("dog", -0.5), cand("fox", -1.0)],
        }]);
        let out = external_generate(&template(), &mut g, 5).unwrap();
        assert_eq!(out, vec![cand("fox", -1.0), cand("cat", -2.0)]);
    }

    #[test]
    fn protocol_violations() {
        let t = template();
        let mut wrong_id = Canned(vec![AdapterResponse {
            id: 9,
            candidates: vec![cand("cat", 0.0)],
        }]);
        assert!(matches!(
            external_generate(&t, &mut wrong_id, 1),
            Err(Error::Adapter(_))
        ));

        let mut empty = Canned(vec![AdapterResponse {
            id: 4,
            candidates: vec![],
        }]);
        assert!(matches!(
            external_generate(&t, &mut empty, 1),
            Err(Error::Adapter(_))
        ));

        let mut misaligned = Canned(vec![AdapterResponse {
            id: 4,
            candidates: vec![FillCandidate {
                fills: vec![vec!["a".into()], vec!["b".into()]],
                score: 0.0,
            }],
        }]);
        assert!(matches!(
            external_generate(&t, &mut misaligned, 1),
            Err(Error::Adapter(_))
        ));
    }

    #[test]
    fn request_wire_format() {
        let req = AdapterRequest {
            id: 4,
            template: template().pieces(),
            m: 2,
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":4,"template":["the",{"sentinel":0},"barked"],"m":2}"#
        );
    }
}
