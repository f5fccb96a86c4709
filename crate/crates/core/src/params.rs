//! Tunable constants, with small-instance defaults.

use crate::error::{Error, Result};
use crate::rational::{fmt_rational, int, rat, Rational};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BalancedMode {
    /// Exhaustive balanced-cut search; contracts hold exactly.
    Exact,
    /// Spectral sweep; certificates are only empirical unless re-checked.
    Heuristic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    /// Sample-set precision.
    pub eps: Rational,
    /// ImproveCut sink capacity is `1/rho²`.
    pub rho: Rational,
    /// Sets at most this sparse are protected by ImproveCut.
    pub improve_sparsity: Rational,
    /// Largest input sparsity ImproveCut accepts.
    pub improve_pre: Rational,
    /// ImproveCut guarantees `|δ_{H[S]}(Q ∩ S)| ≤ |S| / inner_d`.
    pub inner_d: Rational,
    /// Balanced cuts must have both sides at least `balance / 4 · n`.
    pub balance: Rational,
    /// Sample-set multiplier for the sparse-cut guesses.
    pub c: Rational,
    pub big_c: Rational,
    pub lambda: Rational,
    /// Component post-processing slack for vertex cuts; must exceed 2.
    pub alpha: Rational,
    /// Round budget `⌈d · log₂ s⌉ + 1`.
    pub round_d: u32,
    /// Rounding repetitions `⌈c_rep · n · ln(n + 1)⌉`.
    pub c_rep: u32,
    /// Fresh seeds tried after a randomized failure.
    pub retries: u32,
    /// Game stops early once `H` expands by at least `1 / (cert_c · log₂ s)`.
    pub cert_c: Rational,
    /// Factor in the second sample-set condition.
    pub sample_factor: Rational,
    /// Sample-set size constant: falls back to all vertices when
    /// `phi ≥ eps² / sample_d`.
    pub sample_d: Rational,
    /// Vertex sample size constant.
    pub vertex_sample_c: Rational,
    /// Fraction of `|S|` the potential must gain on a qualifying round.
    pub potential_fraction: Rational,
    pub seed: u64,
    pub mode: BalancedMode,
    /// Largest `H` for the exhaustive balanced cut.
    pub exhaustive_bound: usize,
    /// Largest `H` for exhaustive expansion certification.
    pub certify_bound: usize,
    pub lp_tol: f64,
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet {
            eps: rat(1, 100),
            rho: int(4),
            improve_sparsity: rat(1, 16),
            improve_pre: rat(1, 32),
            inner_d: int(8),
            balance: rat(1, 4),
            c: int(8),
            big_c: int(8),
            lambda: int(4),
            alpha: int(4),
            round_d: 10,
            c_rep: 4,
            retries: 5,
            cert_c: int(2),
            sample_factor: int(10),
            sample_d: int(200),
            vertex_sample_c: int(8),
            potential_fraction: rat(1, 100),
            seed: 0,
            mode: BalancedMode::Exact,
            exhaustive_bound: 20,
            certify_bound: 22,
            lp_tol: 1e-7,
        }
    }
}

impl ParamSet {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let zero = int(0);
        for (name, v) in self.rationals() {
            if v <= zero {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.eps >= int(1) {
            return bad("eps must be below 1");
        }
        if self.alpha <= int(2) {
            return bad("alpha must exceed 2");
        }
        if self.balance > rat(1, 2) {
            return bad("balance must be at most 1/2");
        }
        // The ImproveCut guarantee is |S|/rho² + |δ(S)| ≤ (1/rho² + improve_sparsity)|S|.
        let rho2 = self.rho * self.rho;
        if int(1) / self.inner_d < int(1) / rho2 + self.improve_sparsity {
            return bad("need 1/inner_d ≥ 1/rho² + improve_sparsity");
        }
        if self.round_d == 0 || self.c_rep == 0 {
            return bad("round_d and c_rep must be positive");
        }
        if !(self.lp_tol > 0.0 && self.lp_tol < 1e-3) {
            return bad("lp_tol must lie in (0, 1e-3)");
        }
        Ok(())
    }

    fn rationals(&self) -> Vec<(&'static str, Rational)> {
        vec![
            ("eps", self.eps),
            ("rho", self.rho),
            ("improve_sparsity", self.improve_sparsity),
            ("improve_pre", self.improve_pre),
            ("inner_d", self.inner_d),
            ("balance", self.balance),
            ("c", self.c),
            ("big_c", self.big_c),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("cert_c", self.cert_c),
            ("sample_factor", self.sample_factor),
            ("sample_d", self.sample_d),
            ("vertex_sample_c", self.vertex_sample_c),
            ("potential_fraction", self.potential_fraction),
        ]
    }

    /// Sets a named constant from a string, as used by `--set name=value`.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let r = || crate::rational::parse_rational(value).map_err(Error::InvalidParameter);
        let u = || value.parse::<u64>().map_err(|_| Error::InvalidParameter(format!("{name}: bad integer {value:?}")));
        match name {
            "eps" => self.eps = r()?,
            "rho" => self.rho = r()?,
            "improve_sparsity" => self.improve_sparsity = r()?,
            "improve_pre" => self.improve_pre = r()?,
            "inner_d" => self.inner_d = r()?,
            "balance" => self.balance = r()?,
            "c" => self.c = r()?,
            "big_c" => self.big_c = r()?,
            "lambda" => self.lambda = r()?,
            "alpha" => self.alpha = r()?,
            "cert_c" => self.cert_c = r()?,
            "sample_factor" => self.sample_factor = r()?,
            "sample_d" => self.sample_d = r()?,
            "vertex_sample_c" => self.vertex_sample_c = r()?,
            "potential_fraction" => self.potential_fraction = r()?,
            "round_d" => self.round_d = u()? as u32,
            "c_rep" => self.c_rep = u()? as u32,
            "retries" => self.retries = u()? as u32,
            "exhaustive_bound" => self.exhaustive_bound = u()? as usize,
            "certify_bound" => self.certify_bound = u()? as usize,
            "lp_tol" => self.lp_tol = value.parse().map_err(|_| Error::InvalidParameter(format!("lp_tol: bad float {value:?}")))?,
            _ => return Err(Error::InvalidParameter(format!("unknown constant {name:?}"))),
        }
        Ok(())
    }

    /// Snapshot for reports; rationals as "p/q".
    pub fn to_map(&self) -> BTreeMap<String, serde_json::Value> {
        let mut m: BTreeMap<String, serde_json::Value> =
            self.rationals().into_iter().map(|(k, v)| (k.to_string(), fmt_rational(&v).into())).collect();
        m.insert("round_d".into(), self.round_d.into());
        m.insert("c_rep".into(), self.c_rep.into());
        m.insert("retries".into(), self.retries.into());
        m.insert("seed".into(), self.seed.into());
        m.insert("mode".into(), serde_json::to_value(self.mode).unwrap());
        m.insert("exhaustive_bound".into(), self.exhaustive_bound.into());
        m.insert("certify_bound".into(), self.certify_bound.into());
        m.insert("lp_tol".into(), format!("{:e}", self.lp_tol).into());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ParamSet::default().validate().unwrap();
    }

    #[test]
    fn rejects_inconsistent_constants() {
        let mut p = ParamSet::default();
        p.rho = int(2);
        assert!(p.validate().is_err());
        let mut p = ParamSet::default();
        p.alpha = int(2);
        assert!(p.validate().is_err());
        let mut p = ParamSet::default();
        p.set("eps", "1").unwrap();
        assert!(p.validate().is_err());
        assert!(ParamSet::default().set("nope", "1").is_err());
    }
}
