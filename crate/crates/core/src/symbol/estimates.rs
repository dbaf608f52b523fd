use super::{falling_derivative, forward_difference, MultiIndex, SampledSymbol, SymbolClassParams};
use crate::error::{PdzError, Result};

/// Zero threshold for ellipticity constants.
pub const ELLIPTICITY_THRESHOLD: f64 = 1e-10;

/// Smallest `C` with `|D^(beta)_x Delta^alpha_k sigma| <= C (1+|k|)^{mu - rho|alpha| + delta|beta|}` on the box.
pub fn seminorm_estimate(
    sigma: &SampledSymbol,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    params: SymbolClassParams,
) -> Result<f64> {
    let d = falling_derivative(&forward_difference(sigma, alpha)?, beta)?;
    let expo = params.mu - params.rho * alpha.order() as f64 + params.delta * beta.order() as f64;
    let bx = sigma.lattice();
    Ok((0..bx.len())
        .map(|p| {
            let w = (1.0 + bx.norm(p)).powf(-expo);
            d.row(p).iter().map(|v| v.norm()).fold(0.0, f64::max) * w
        })
        .fold(0.0, f64::max))
}

/// Least-squares slope of `log max_x |sigma(k, x)|` against `log(1 + |k|)` over dyadic shells.
pub fn order_fit(sigma: &SampledSymbol) -> Result<f64> {
    order_fit_in(sigma, 0.0, f64::INFINITY)
}

/// As [`order_fit`], using only lattice points with `r_min <= |k| <= r_max`.
///
/// Each shell `2^j <= 1 + |k| < 2^{j+1}` contributes the point
/// `(log(1 + |k*|), log max)`, where `k*` attains the shell maximum.
pub fn order_fit_in(sigma: &SampledSymbol, r_min: f64, r_max: f64) -> Result<f64> {
    let bx = sigma.lattice();
    if bx.half_width() < 4 {
        return Err(PdzError::domain("order fit needs a box with N >= 4"));
    }
    let mut shells: Vec<(f64, f64)> = Vec::new();
    let mut best: Vec<Option<(f64, f64)>> = Vec::new();
    for p in 0..bx.len() {
        let r = bx.norm(p);
        if r < r_min || r > r_max {
            continue;
        }
        let shell = (1.0 + r).log2().floor() as usize;
        if best.len() <= shell {
            best.resize(shell + 1, None);
        }
        let m = sigma.row(p).iter().map(|v| v.norm()).fold(0.0, f64::max);
        match best[shell] {
            Some((bm, _)) if bm >= m => {}
            _ => best[shell] = Some((m, r)),
        }
    }
    for (m, r) in best.into_iter().flatten() {
        if m > 0.0 && m.is_finite() {
            shells.push(((1.0 + r).ln(), m.ln()));
        }
    }
    if shells.len() < 2 {
        return Err(PdzError::domain("order fit needs at least two nonzero shells"));
    }
    let n = shells.len() as f64;
    let mx = shells.iter().map(|s| s.0).sum::<f64>() / n;
    let my = shells.iter().map(|s| s.1).sum::<f64>() / n;
    let sxy: f64 = shells.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let sxx: f64 = shells.iter().map(|s| (s.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Result of an ellipticity check.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticityReport {
    pub ok: bool,
    /// `min |sigma(k, x)| (1+|k|)^{-mu}` over `|k| >= M_cut`.
    pub constant: f64,
    pub witness_k: Vec<i64>,
    pub witness_x: Vec<f64>,
    /// `|sigma|` at the witness.
    pub witness_value: f64,
}

/// Checks `|sigma(k, x)| >= C (1+|k|)^mu` for `|k| >= m_cut` with `C > 1e-10`.
pub fn ellipticity_check(sigma: &SampledSymbol, mu: f64, m_cut: f64) -> Result<EllipticityReport> {
    let bx = sigma.lattice();
    if m_cut >= bx.half_width() as f64 {
        return Err(PdzError::domain(format!(
            "M_cut = {m_cut} must be below the half-width {}",
            bx.half_width()
        )));
    }
    let mut best = (f64::INFINITY, 0usize, 0usize, 0.0);
    for p in 0..bx.len() {
        let r = bx.norm(p);
        if r < m_cut {
            continue;
        }
        let w = (1.0 + r).powf(-mu);
        for (q, v) in sigma.row(p).iter().enumerate() {
            let a = v.norm();
            if a * w < best.0 {
                best = (a * w, p, q, a);
            }
        }
    }
    Ok(EllipticityReport {
        ok: best.0 > ELLIPTICITY_THRESHOLD,
        constant: best.0,
        witness_k: bx.point(best.1),
        witness_x: sigma.grid().node(best.2),
        witness_value: best.3,
    })
}
