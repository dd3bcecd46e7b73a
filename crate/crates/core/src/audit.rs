//! Exponent arithmetic: the inequality chains gating the iteration, the
//! stage index after which the Hölder bookkeeping closes, and a decay fit
//! for measured deficit sequences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stage::{j_count, theta_of, GlobalParams};

#[derive(Clone, Debug, Serialize)]
pub struct AuditCheck {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs < rhs` when set, `lhs <= rhs` otherwise.
    pub strict: bool,
    pub pass: bool,
}

impl AuditCheck {
    fn new(id: &str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        Self { id: id.to_string(), lhs, rhs, strict, pass }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub n: usize,
    pub eps: f64,
    pub n_star: usize,
    pub theta: f64,
    pub b: f64,
    pub vartheta: f64,
    pub tau: f64,
    pub alpha: f64,
    pub j: usize,
    pub beta: f64,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, id: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// The check with the smallest margin.
    pub fn binding(&self) -> &AuditCheck {
        self.checks
            .iter()
            .min_by(|a, b| a.margin().total_cmp(&b.margin()))
            .expect("audit always has checks")
    }

    /// One JSON object per check, newline-terminated.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let v = serde_json::json!({
                "kind": "audit",
                "id": c.id,
                "lhs": c.lhs,
                "rhs": c.rhs,
                "margin": c.margin(),
                "strict": c.strict,
                "pass": c.pass,
            });
            s.push_str(&v.to_string());
            s.push('\n');
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "n = {}  eps = {}  N* = {}\ntheta = {:.12}  b = {:.12}  vartheta = {:.12}\ntau = {:.12}  alpha = {:.6e}  J = {}  beta = {:.12}\n\n",
            self.n, self.eps, self.n_star, self.theta, self.b, self.vartheta, self.tau, self.alpha, self.j, self.beta
        );
        s.push_str(&format!("{:<14} {:>22} {:>22} {:>14}  {}\n", "check", "lhs", "rhs", "margin", "result"));
        for c in &self.checks {
            s.push_str(&format!(
                "{:<14} {:>22.15e} {:>22.15e} {:>14.6e}  {}\n",
                c.id,
                c.lhs,
                c.rhs,
                c.margin(),
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        s
    }
}

/// β in the upper bound θ < ϑ/b < (θ+ε)/(1+β).
pub fn beta(n: usize, b: f64, j: usize) -> f64 {
    let (nf, jf) = (n as f64, j as f64);
    if n % 2 == 1 {
        (jf * (nf - 1.0) * (b - 1.0) + 2.0 * b * nf) / (jf * nf)
    } else {
        (jf * nf * (b - 1.0) + 2.0 * b * nf) / (jf * (nf + 1.0))
    }
}

/// First chain inequality, returned as (lhs, rhs).
pub fn chain_first(n: usize, b: f64, vartheta: f64, alpha: f64, j: usize) -> (f64, f64) {
    let (nf, jf) = (n as f64, j as f64);
    let growth = 2.0 * vartheta * (b - 1.0) + b * alpha;
    let lhs = if n % 2 == 1 {
        1.0 - vartheta / b + growth * (jf * (nf - 1.0) + 2.0 * nf) / (2.0 * jf)
    } else {
        1.0 - vartheta / b + nf * growth * (jf + 2.0) / (2.0 * jf)
    };
    (lhs, b - vartheta)
}

/// Second chain inequality, returned as (lhs, rhs).
pub fn chain_second(n: usize, b: f64, vartheta: f64, alpha: f64, j: usize) -> (f64, f64) {
    let (nf, jf) = (n as f64, j as f64);
    let (k, shift) = if n % 2 == 1 { (nf + 1.0, nf) } else { (nf + 2.0, nf + 1.0) };
    let lhs = alpha * (jf * k + 2.0 * nf) / (2.0 * jf);
    let rhs = b * (b - 1.0) * (1.0 - vartheta * (shift + 2.0 * nf / jf - (b - 1.0) / b));
    (lhs, rhs)
}

/// Cubic whose non-positivity gives δ_{m+1}^{1/2} ≤ Λ^{−1} up to δ_*^{1/2}.
pub fn delta_poly(n: usize, eps: f64) -> f64 {
    let nf = n as f64;
    -(nf - 1.0).powi(2) * eps.powi(3) - (9.0 * nf - 11.0) / (5.0 * (nf + 1.0)) * eps * eps
        + (3.0 * nf + 1.0) / (nf + 1.0) * eps
        - 2.0 / (nf + 1.0)
}

/// Evaluates every exponent inequality for (n, ε, N_*).
pub fn audit_exponents(n: usize, eps: f64, n_star: usize) -> Result<AuditReport> {
    if n < 3 {
        return Err(Error::InvalidDimension(format!("audit needs n >= 3, got {n}")));
    }
    let nf = n as f64;
    if !(eps > 0.0 && eps < 2.0 / (nf * nf)) {
        return Err(Error::EpsOutOfRange(format!("eps = {eps} outside (0, 2/n^2) for n = {n}")));
    }
    let theta = theta_of(n, eps);
    let b = 1.0 + eps * (nf - 1.0) / 2.0;
    let vartheta = b * (theta + eps) * (1.0 - (nf - 1.0) * eps);
    let tau = 2.0 * vartheta * b * (n_star as f64 + 1.0) + vartheta - b;
    let alpha = eps * eps / 10.0;
    let j = j_count(n, eps);
    let beta = beta(n, b, j);

    let chain = if n % 2 == 1 { "chain.odd" } else { "chain.even" };
    let (l1, r1) = chain_first(n, b, vartheta, alpha, j);
    let (l2, r2) = chain_second(n, b, vartheta, alpha, j);
    let checks = vec![
        AuditCheck::new("ratio.lower", theta, vartheta / b, true),
        AuditCheck::new("ratio.upper", vartheta / b, (theta + eps) / (1.0 + beta), true),
        AuditCheck::new(&format!("{chain}.1"), l1, r1, true),
        AuditCheck::new(&format!("{chain}.2"), l2, r2, true),
        AuditCheck::new("alpha.bound", alpha, (nf - 1.0).powi(2) * eps * eps / (2.0 * nf * (nf + 2.0)), false),
        AuditCheck::new("J.lower", 2.0 * nf, j as f64, false),
        AuditCheck::new("eps.delta", eps, 2.0 / (3.0 * nf + 1.0), true),
        AuditCheck::new("delta.poly", delta_poly(n, eps), 0.0, false),
    ];
    Ok(AuditReport { n, eps, n_star, theta, b, vartheta, tau, alpha, j, beta, checks })
}

/// Smallest integer m with m > log_b(τθ/(b(ϑ−bθ))), floored at 0; past it
/// τθ − b^{m+2}(ϑ/b − θ) < 0.
pub fn stage_index_threshold(gp: &GlobalParams) -> Result<i64> {
    let (b, theta, vt, tau) = (gp.b, gp.theta, gp.vartheta, gp.tau);
    if !(b > 1.0) || !theta.is_finite() || !vt.is_finite() || !tau.is_finite() {
        return Err(Error::Precondition(format!("invalid parameters b = {b}, theta = {theta}")));
    }
    let gap = vt - b * theta;
    if !(gap > 0.0) {
        return Err(Error::DegenerateExponent(format!("vartheta - b*theta = {gap} is not positive")));
    }
    let arg = tau * theta / (b * gap);
    if !(arg > 0.0) {
        return Ok(0);
    }
    let x = arg.ln() / b.ln();
    Ok(((x.floor() as i64) + 1).max(0))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// d_{m+1}/d_m.
    pub factors: Vec<f64>,
    pub monotone: bool,
    /// Fewer than three usable points.
    pub insufficient: bool,
    /// Slope of log log(scale/d) against m; comparable to log b.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Fits log log(scale/d_m) against m. Entries with d ≥ scale or d ≤ 0 have
/// no double logarithm and are left out of the fit.
pub fn fit_decay(deficits: &[f64], scale: f64) -> DecayFit {
    let factors: Vec<f64> = deficits.windows(2).map(|w| w[1] / w[0]).collect();
    let monotone = deficits.windows(2).all(|w| w[1] <= w[0]);
    let pts: Vec<(f64, f64)> = deficits
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0 && d < scale)
        .map(|(m, &d)| (m as f64, (scale / d).ln().ln()))
        .filter(|(_, y)| y.is_finite())
        .collect();
    if pts.len() < 3 {
        return DecayFit { factors, monotone, insufficient: true, slope: None, intercept: None, r_squared: None };
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    DecayFit { factors, monotone, insufficient: false, slope: Some(slope), intercept: Some(intercept), r_squared: Some(r2) }
}
