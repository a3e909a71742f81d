//! Per-step records of every optimizer intermediate, and the plain-text
//! fixture format used to check them in.
//!
//! Fixture lines look like
//!
//! ```text
//! # free-form comment
//! t idx g m s mbar mhat shat dtheta theta
//! ```
//!
//! with each real printed to 17 significant digits.

use std::fmt::Write as _;

use thiserror::Error;

use crate::optim::Kernel;

/// Intermediates of one parameter element in one step.
///
/// For the adaptive kernels `second_moment`/`second_hat` hold `s`/`s_hat`
/// (belief) or `v`/`v_hat`. For SGDM `m` is the momentum buffer, `m_bar` and
/// `m_hat` the applied direction and both second-moment fields are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementRecord {
    pub g: f64,
    pub m: f64,
    /// `g - m` after the momentum update.
    pub residual: f64,
    pub second_moment: f64,
    pub m_bar: f64,
    pub m_hat: f64,
    pub second_hat: f64,
    /// Change applied by decoupled weight decay (`-lr * lambda * theta`).
    pub decay: f64,
    /// Adaptive update `-lr * m_hat / (sqrt(second_hat) + eps)`, decay excluded.
    pub delta_theta: f64,
    pub theta_after: f64,
}

impl ElementRecord {
    /// Fields in a fixed order, paired with their names, for diffing.
    pub fn fields(&self) -> [(&'static str, f64); 10] {
        [
            ("g", self.g),
            ("m", self.m),
            ("residual", self.residual),
            ("second_moment", self.second_moment),
            ("m_bar", self.m_bar),
            ("m_hat", self.m_hat),
            ("second_hat", self.second_hat),
            ("decay", self.decay),
            ("delta_theta", self.delta_theta),
            ("theta_after", self.theta_after),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTranscript {
    pub kernel: Kernel,
    /// Step counter after the update; the first step has `t = 1`.
    pub t: u64,
    pub records: Vec<ElementRecord>,
}

impl StepTranscript {
    pub fn theta(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.theta_after).collect()
    }

    pub fn delta_theta(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.delta_theta).collect()
    }
}

/// One line of a transcript fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureRow {
    pub t: u64,
    pub idx: usize,
    pub g: f64,
    pub m: f64,
    pub s: f64,
    pub mbar: f64,
    pub mhat: f64,
    pub shat: f64,
    pub dtheta: f64,
    pub theta: f64,
}

impl FixtureRow {
    pub fn from_record(t: u64, idx: usize, r: &ElementRecord) -> Self {
        Self {
            t,
            idx,
            g: r.g,
            m: r.m,
            s: r.second_moment,
            mbar: r.m_bar,
            mhat: r.m_hat,
            shat: r.second_hat,
            dtheta: r.delta_theta,
            theta: r.theta_after,
        }
    }

    pub fn values(&self) -> [(&'static str, f64); 8] {
        [
            ("g", self.g),
            ("m", self.m),
            ("s", self.s),
            ("mbar", self.mbar),
            ("mhat", self.mhat),
            ("shat", self.shat),
            ("dtheta", self.dtheta),
            ("theta", self.theta),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixtureError {
    #[error("line {line}: expected 10 columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: cannot parse `{token}`")]
    Parse { line: usize, token: String },
}

/// Formats a real with 17 significant digits.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_fixture(transcripts: &[StepTranscript]) -> String {
    let mut out = String::from("# t idx g m s mbar mhat shat dtheta theta\n");
    for tr in transcripts {
        for (idx, r) in tr.records.iter().enumerate() {
            let row = FixtureRow::from_record(tr.t, idx, r);
            let _ = write!(out, "{} {}", row.t, row.idx);
            for (_, v) in row.values() {
                let _ = write!(out, " {}", sig17(v));
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_fixture(text: &str) -> Result<Vec<FixtureRow>, FixtureError> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 10 {
            return Err(FixtureError::Columns { line: n + 1, found: tokens.len() });
        }
        let bad = |token: &str| FixtureError::Parse { line: n + 1, token: token.to_string() };
        let t = tokens[0].parse().map_err(|_| bad(tokens[0]))?;
        let idx = tokens[1].parse().map_err(|_| bad(tokens[1]))?;
        let mut reals = [0.0; 8];
        for (slot, tok) in reals.iter_mut().zip(&tokens[2..]) {
            *slot = tok.parse().map_err(|_| bad(tok))?;
        }
        let [g, m, s, mbar, mhat, shat, dtheta, theta] = reals;
        rows.push(FixtureRow { t, idx, g, m, s, mbar, mhat, shat, dtheta, theta });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for x in [0.1, -2.1110980562252035e-3, 1.0 / 3.0, 1e-300, 123456.789] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn parse_rejects_short_lines() {
        assert!(matches!(
            parse_fixture("1 0 1.0 2.0"),
            Err(FixtureError::Columns { line: 1, found: 4 })
        ));
        assert!(matches!(
            parse_fixture("# ok\n1 0 a 0 0 0 0 0 0 0"),
            Err(FixtureError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn fixture_text_round_trips() {
        let record = ElementRecord {
            g: 1.0,
            m: 0.1,
            residual: 0.9,
            second_moment: 8.1001e-4,
            m_bar: 0.19,
            m_hat: 1.9,
            second_hat: 0.81001,
            decay: 0.0,
            delta_theta: -2.111e-3,
            theta_after: -2.111e-3,
        };
        let tr = StepTranscript { kernel: Kernel::AdaPlus, t: 1, records: vec![record, record] };
        let rows = parse_fixture(&to_fixture(&[tr])).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], FixtureRow::from_record(1, 1, &record));
    }
}
