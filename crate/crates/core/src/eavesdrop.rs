//! Zero-error photon-number-splitting attacks and the resulting security
//! analysis.
//!
//! Eve measures the photon number of every pulse for free and then, per
//! photon number `n`, mixes four pure actions: block the pulse, forward it
//! over a lossless line, keep `k` photons in a memory and forward the rest,
//! or run an unambiguous discrimination on all `n` photons and resend a fresh
//! photon on success (IRUD). Her constraint is that Bob's detection rate
//! equals what the physical line would give him.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::photonics::{self, ChannelParams, ParamError};
use crate::protocol::ProtocolKind;
use crate::qcore::{self, qubit_state, tensor_power, StateLabel, GRAM_SINGULAR_TOL, MAX_QUBITS};

/// Bisection stopping width, dB.
pub const BISECTION_TOL_DB: f64 = 1e-4;
/// Row-sum tolerance for an [`AttackPolicy`].
pub const POLICY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EavesdropError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("action {action} is not admissible on {n}-photon pulses")]
    Inadmissible { n: u32, action: EveAction },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("required rate {required:e} exceeds Eve's lossless-forward rate {available:e}")]
    Infeasible { required: f64, available: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EveAction {
    Block,
    ForwardAllLossless,
    /// Keep this many photons, forward the rest losslessly.
    Store(u32),
    /// Unambiguous discrimination; resend on a conclusive outcome, block otherwise.
    Irud,
}

impl fmt::Display for EveAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EveAction::Block => f.write_str("block"),
            EveAction::ForwardAllLossless => f.write_str("forward"),
            EveAction::Store(k) => write!(f, "store{k}"),
            EveAction::Irud => f.write_str("irud"),
        }
    }
}

/// `H(p) = -p log₂ p - (1-p) log₂(1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Best information on the bit from `k` stored copies of one of two states
/// with overlap `chi`, measured after the set is announced:
/// `1 - H(P)` with `P = (1 + √(1 - χ^{2k}))/2`.
pub fn storage_info(k: u32, chi: f64) -> f64 {
    let p = 0.5 * (1.0 + (1.0 - chi.powi(2 * k as i32)).max(0.0).sqrt());
    (1.0 - binary_entropy(p)).clamp(0.0, 1.0)
}

/// The four `n`-photon signal states in cycle order `+z, +x, -z, -x`.
fn signal_labels() -> [StateLabel; 4] {
    [StateLabel::PlusZ, StateLabel::PlusX, StateLabel::MinusZ, StateLabel::MinusX]
}

fn usd_success_explicit(n: u32) -> f64 {
    let states: Vec<_> = signal_labels()
        .iter()
        .map(|&l| tensor_power(&qubit_state(l), n).expect("n within dense limit"))
        .collect();
    qcore::build_usd_povm(&states).map_or(0.0, |usd| usd.p_ok)
}

/// `λ_min` of the `n`-photon Gram matrix, built from single-photon overlaps
/// via `<a^{⊗n}|b^{⊗n}> = <a|b>^n`.
fn usd_success_from_overlaps(n: u32) -> f64 {
    let single: Vec<_> = signal_labels().iter().map(|&l| qubit_state(l)).collect();
    let g1 = qcore::gram_matrix(&single).expect("equal dimensions");
    let g: DMatrix<Complex64> = g1.map(|z| z.powu(n));
    let q = qcore::hermitian_eigenvalues(&g)[0];
    if q <= GRAM_SINGULAR_TOL {
        0.0
    } else {
        q
    }
}

/// Conclusive-outcome probability of the optimal equal-success USD on the
/// four `n`-photon signal states; 0 when they are linearly dependent.
///
/// Both protocols send the same four states, so the value does not depend on
/// `protocol`.
pub fn irud_success(n: u32, _protocol: ProtocolKind) -> f64 {
    static EXPLICIT: OnceLock<Vec<f64>> = OnceLock::new();
    if n == 0 {
        return 0.0;
    }
    if n <= MAX_QUBITS {
        let table = EXPLICIT.get_or_init(|| (0..=MAX_QUBITS).map(|k| if k == 0 { 0.0 } else { usd_success_explicit(k) }).collect());
        table[n as usize]
    } else {
        usd_success_from_overlaps(n)
    }
}

pub fn is_admissible(n: u32, action: EveAction, p_ok: f64) -> bool {
    match action {
        EveAction::Block | EveAction::ForwardAllLossless => n >= 1,
        EveAction::Store(k) => n >= 2 && k >= 1 && k < n,
        EveAction::Irud => n >= 1 && p_ok > 0.0,
    }
}

pub fn admissible_actions(n: u32, p_ok: f64) -> Vec<EveAction> {
    let mut actions = vec![EveAction::Block, EveAction::ForwardAllLossless];
    actions.extend((1..n).map(EveAction::Store));
    if is_admissible(n, EveAction::Irud, p_ok) {
        actions.push(EveAction::Irud);
    }
    actions
}

/// Probability that Bob's detector fires given Eve's action on an `n`-photon
/// pulse. Everything Eve forwards travels losslessly.
pub fn action_detection(n: u32, action: EveAction, eta_det: f64, p_ok: f64) -> f64 {
    match action {
        EveAction::Block => 0.0,
        EveAction::ForwardAllLossless => photonics::detection_probability(n, eta_det),
        EveAction::Store(k) => photonics::detection_probability(n.saturating_sub(k), eta_det),
        EveAction::Irud => p_ok * eta_det,
    }
}

/// Eve's bits per detection she induces; `None` for blocked pulses.
pub fn eve_info_per_action(
    n: u32,
    action: EveAction,
    protocol: ProtocolKind,
    chi: f64,
) -> Result<Option<f64>, EavesdropError> {
    let p_ok = irud_success(n, protocol);
    if !is_admissible(n, action, p_ok) {
        return Err(EavesdropError::Inadmissible { n, action });
    }
    Ok(match action {
        EveAction::Block => None,
        EveAction::ForwardAllLossless => Some(0.0),
        EveAction::Store(k) => Some(match protocol {
            ProtocolKind::Bb84 => 1.0,
            ProtocolKind::Sarg => storage_info(k, chi),
        }),
        EveAction::Irud => Some(1.0),
    })
}

/// Per-photon-number mixture over Eve's actions; row `i` is `n = i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPolicy {
    rows: Vec<Vec<(EveAction, f64)>>,
}

impl AttackPolicy {
    pub fn new(rows: Vec<Vec<(EveAction, f64)>>) -> Result<Self, EavesdropError> {
        for (i, row) in rows.iter().enumerate() {
            let n = i as u32 + 1;
            let mut sum = 0.0;
            for &(action, w) in row {
                if !(w >= 0.0) {
                    return Err(EavesdropError::InvalidPolicy(format!("negative weight {w} on n = {n}")));
                }
                if !is_admissible(n, action, irud_success(n, ProtocolKind::Sarg)) {
                    return Err(EavesdropError::Inadmissible { n, action });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > POLICY_TOL {
                return Err(EavesdropError::InvalidPolicy(format!("row n = {n} sums to {sum}")));
            }
        }
        Ok(Self { rows })
    }

    /// Same action for every photon number from 1 to `n_max`.
    pub fn uniform<F: Fn(u32) -> EveAction>(n_max: u32, action: F) -> Result<Self, EavesdropError> {
        Self::new((1..=n_max).map(|n| vec![(action(n), 1.0)]).collect())
    }

    /// Block single photons, keep one photon of every other pulse.
    pub fn store_one(n_max: u32) -> Self {
        Self::uniform(n_max, |n| if n == 1 { EveAction::Block } else { EveAction::Store(1) })
            .expect("admissible by construction")
    }

    pub fn n_max(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn row(&self, n: u32) -> &[(EveAction, f64)] {
        self.rows.get(n as usize - 1).map_or(&[], |r| r.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &[(EveAction, f64)])> {
        self.rows.iter().enumerate().map(|(i, r)| (i as u32 + 1, r.as_slice()))
    }

    /// Weight on `action` at photon number `n`.
    pub fn weight(&self, n: u32, action: EveAction) -> f64 {
        self.row(n).iter().filter(|(a, _)| *a == action).fold(0.0, |acc, (_, w)| acc + w)
    }
}

/// Bob's detection probability per pulse when Eve follows `policy`.
pub fn bob_rate_under_policy(policy: &AttackPolicy, params: &ChannelParams) -> f64 {
    policy
        .rows()
        .map(|(n, row)| {
            let p_ok = irud_success(n, ProtocolKind::Sarg);
            photonics::poisson_pmf(params.mu, n)
                * row
                    .iter()
                    .map(|&(a, w)| w * action_detection(n, a, params.eta_det, p_ok))
                    .sum::<f64>()
        })
        .sum()
}

/// Eve's bits per pulse under `policy`: `Σ_n p_n Σ_a x d I`.
pub fn eve_bits_under_policy(
    policy: &AttackPolicy,
    params: &ChannelParams,
    protocol: ProtocolKind,
) -> Result<f64, EavesdropError> {
    let mut total = 0.0;
    for (n, row) in policy.rows() {
        let p_ok = irud_success(n, protocol);
        let p_n = photonics::poisson_pmf(params.mu, n);
        for &(a, w) in row {
            if let Some(info) = eve_info_per_action(n, a, protocol, params.chi)? {
                total += p_n * w * action_detection(n, a, params.eta_det, p_ok) * info;
            }
        }
    }
    Ok(total)
}

/// One sample of Eve's optimal-information curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub delta_db: f64,
    /// Bits per sifted key bit, in `[0, 1]`.
    pub eve_info: f64,
    pub policy: AttackPolicy,
    pub feasible: bool,
    /// Detection rate Bob expects from the line, which Eve reproduces.
    pub bob_rate: f64,
    /// Action carrying the largest share of Bob's detections.
    pub dominant_action: EveAction,
}

#[derive(Debug, Clone, Copy)]
struct Vertex {
    action: EveAction,
    rate: f64,
    bits: f64,
}

/// Photon-number-resolved attack model at fixed source and detector.
#[derive(Debug, Clone)]
pub struct AttackModel {
    params: ChannelParams,
    protocol: ProtocolKind,
    pmf: Vec<f64>,
    p_ok: Vec<f64>,
}

impl AttackModel {
    pub fn new(params: ChannelParams, protocol: ProtocolKind) -> Result<Self, EavesdropError> {
        params.validate()?;
        Ok(Self::build(params, protocol))
    }

    /// Model cut at `params.n_max` without the Poisson-tail check. Rates on
    /// both sides of the matching constraint use the same truncation.
    pub fn truncated(params: ChannelParams, protocol: ProtocolKind) -> Result<Self, EavesdropError> {
        match params.validate() {
            Ok(()) | Err(ParamError::Truncation { .. }) => Ok(Self::build(params, protocol)),
            Err(e) => Err(e.into()),
        }
    }

    fn build(params: ChannelParams, protocol: ProtocolKind) -> Self {
        let pmf = (0..=params.n_max).map(|n| photonics::poisson_pmf(params.mu, n)).collect();
        let p_ok = (0..=params.n_max).map(|n| irud_success(n, protocol)).collect();
        Self { params, protocol, pmf, p_ok }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn protocol(&self) -> ProtocolKind {
        self.protocol
    }

    pub fn p_ok(&self, n: u32) -> f64 {
        self.p_ok[n as usize]
    }

    fn info(&self, n: u32, action: EveAction) -> f64 {
        match action {
            EveAction::Block | EveAction::ForwardAllLossless => 0.0,
            EveAction::Store(k) => match self.protocol {
                ProtocolKind::Bb84 => 1.0,
                ProtocolKind::Sarg => storage_info(k, self.params.chi),
            },
            EveAction::Irud => {
                debug_assert!(self.p_ok(n) > 0.0);
                1.0
            }
        }
    }

    /// Upper concave envelope of the (rate, bits) points reachable on
    /// `n`-photon pulses, from Block at the origin to the largest rate.
    fn envelope(&self, n: u32) -> Vec<Vertex> {
        let p_n = self.pmf[n as usize];
        let mut pts: Vec<Vertex> = admissible_actions(n, self.p_ok(n))
            .into_iter()
            .map(|action| {
                let rate = p_n * action_detection(n, action, self.params.eta_det, self.p_ok(n));
                Vertex { action, rate, bits: rate * self.info(n, action) }
            })
            .collect();
        pts.sort_by(|a, b| a.rate.total_cmp(&b.rate).then(b.bits.total_cmp(&a.bits)));
        pts.dedup_by(|later, earlier| later.rate == earlier.rate);

        let mut hull: Vec<Vertex> = Vec::with_capacity(pts.len());
        for p in pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.rate - a.rate) * (p.bits - a.bits) - (b.bits - a.bits) * (p.rate - a.rate);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull
    }

    /// Detection rate with every pulse forwarded losslessly.
    pub fn max_rate(&self) -> f64 {
        (1..=self.params.n_max)
            .map(|n| self.pmf[n as usize] * action_detection(n, EveAction::ForwardAllLossless, self.params.eta_det, 0.0))
            .sum()
    }

    /// Bob's expected rate from the physical line.
    pub fn line_rate(&self, delta_db: f64) -> f64 {
        photonics::raw_rate_at(&self.params, delta_db)
    }

    /// Rate Eve can deliver while learning every bit.
    pub fn full_information_rate(&self) -> f64 {
        (1..=self.params.n_max)
            .map(|n| {
                self.envelope(n)
                    .iter()
                    .filter(|v| v.action != EveAction::Block && (v.bits - v.rate).abs() <= 1e-15 * v.rate.max(1e-300))
                    .map(|v| v.rate)
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    /// Smallest loss at which Eve learns every bit under rate matching.
    pub fn full_information_delta(&self) -> f64 {
        solve_attenuation(&self.params, self.full_information_rate())
    }

    /// Maximizes Eve's bits per pulse subject to Bob's rate matching the
    /// line at `delta_db`.
    ///
    /// One equality plus per-row simplices: the optimum is the sum of the
    /// rows' concave envelopes, filled greedily by decreasing slope.
    pub fn optimize(&self, delta_db: f64) -> Result<CurvePoint, EavesdropError> {
        let required = self.line_rate(delta_db);
        let envelopes: Vec<Vec<Vertex>> = (1..=self.params.n_max).map(|n| self.envelope(n)).collect();

        // (slope, row, segment index)
        let mut segments: Vec<(f64, usize, usize)> = Vec::new();
        for (row, hull) in envelopes.iter().enumerate() {
            for j in 0..hull.len().saturating_sub(1) {
                let (a, b) = (hull[j], hull[j + 1]);
                segments.push(((b.bits - a.bits) / (b.rate - a.rate), row, j));
            }
        }
        segments.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

        // per row: (vertex reached, fraction of the next segment)
        let mut position = vec![(0usize, 0.0f64); envelopes.len()];
        let mut remaining = required;
        let mut bits = 0.0;
        for &(_, row, j) in &segments {
            if remaining <= 0.0 {
                break;
            }
            let (a, b) = (envelopes[row][j], envelopes[row][j + 1]);
            let span = b.rate - a.rate;
            if span <= remaining {
                remaining -= span;
                bits += b.bits - a.bits;
                position[row] = (j + 1, 0.0);
            } else {
                let t = remaining / span;
                bits += t * (b.bits - a.bits);
                position[row] = (j, t);
                remaining = 0.0;
            }
        }

        let available = self.max_rate();
        let feasible = remaining <= 1e-12 * required.max(f64::MIN_POSITIVE);
        if !feasible {
            return Err(EavesdropError::Infeasible { required, available });
        }

        let rows: Vec<Vec<(EveAction, f64)>> = envelopes
            .iter()
            .zip(&position)
            .map(|(hull, &(j, t))| {
                if t > 0.0 {
                    vec![(hull[j].action, 1.0 - t), (hull[j + 1].action, t)]
                } else {
                    vec![(hull[j].action, 1.0)]
                }
            })
            .collect();
        let policy = AttackPolicy { rows };
        let dominant_action = self.dominant_action(&policy);
        let eve_info = if required > 0.0 { (bits / required).clamp(0.0, 1.0) } else { 0.0 };
        Ok(CurvePoint {
            delta_db,
            eve_info,
            policy,
            feasible,
            bob_rate: required,
            dominant_action,
        })
    }

    fn dominant_action(&self, policy: &AttackPolicy) -> EveAction {
        let mut shares: Vec<(EveAction, f64)> = Vec::new();
        for (n, row) in policy.rows() {
            for &(a, w) in row {
                let r = self.pmf[n as usize] * w * action_detection(n, a, self.params.eta_det, self.p_ok(n));
                match shares.iter_mut().find(|(b, _)| *b == a) {
                    Some((_, s)) => *s += r,
                    None => shares.push((a, r)),
                }
            }
        }
        shares.sort_by_key(|(a, _)| *a);
        shares
            .into_iter()
            .filter(|(_, r)| *r > 0.0)
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map_or(EveAction::Block, |(a, _)| a)
    }

    /// Bits per pulse under an arbitrary policy, using this model's truncation.
    pub fn policy_bits(&self, policy: &AttackPolicy) -> f64 {
        policy
            .rows()
            .filter(|(n, _)| *n <= self.params.n_max)
            .map(|(n, row)| {
                row.iter()
                    .map(|&(a, w)| {
                        self.pmf[n as usize] * w * action_detection(n, a, self.params.eta_det, self.p_ok(n)) * self.info(n, a)
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Bob's rate under an arbitrary policy, using this model's truncation.
    pub fn policy_rate(&self, policy: &AttackPolicy) -> f64 {
        policy
            .rows()
            .filter(|(n, _)| *n <= self.params.n_max)
            .map(|(n, row)| {
                row.iter()
                    .map(|&(a, w)| self.pmf[n as usize] * w * action_detection(n, a, self.params.eta_det, self.p_ok(n)))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Optimal zero-error attack at `delta_db`.
pub fn optimize_policy(
    params: &ChannelParams,
    protocol: ProtocolKind,
    delta_db: f64,
) -> Result<CurvePoint, EavesdropError> {
    AttackModel::new(*params, protocol)?.optimize(delta_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalMethod {
    Bb84Storage,
    SargIrud,
    GenericEstimate,
}

impl fmt::Display for CriticalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriticalMethod::Bb84Storage => "bb84-storage",
            CriticalMethod::SargIrud => "sarg-irud",
            CriticalMethod::GenericEstimate => "generic-estimate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalAttenuationReport {
    pub delta_c_db: f64,
    pub length_km: f64,
    pub method: CriticalMethod,
    /// Same threshold from the linearized rate `η_det η_δ μ`, where applicable.
    pub approx_delta_c_db: Option<f64>,
}

/// Attenuation at which the exact line rate drops to `target`, by bisection.
/// Returns 0 when the line at zero loss already delivers no more than `target`.
pub fn solve_attenuation(params: &ChannelParams, target: f64) -> f64 {
    if photonics::raw_rate_at(params, 0.0) <= target {
        return 0.0;
    }
    if target <= 0.0 {
        return f64::INFINITY;
    }
    let mut hi = 10.0;
    while photonics::raw_rate_at(params, hi) > target {
        hi *= 2.0;
        if hi > 1e4 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    while hi - lo > BISECTION_TOL_DB * 1e-3 {
        let mid = 0.5 * (lo + hi);
        if photonics::raw_rate_at(params, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bob's rate when Eve blocks single photons and keeps one photon from every
/// multi-photon pulse: `Σ_{n≥2} p_n (1 - (1-η_det)^{n-1})`.
pub fn store_one_rate(params: &ChannelParams) -> f64 {
    bob_rate_under_policy(&AttackPolicy::store_one(params.n_max), params)
}

/// Loss beyond which the storage attack on BB84 gives Eve every bit.
pub fn critical_attenuation_bb84(params: &ChannelParams) -> Result<CriticalAttenuationReport, EavesdropError> {
    params.validate()?;
    let delta = solve_attenuation(params, store_one_rate(params));
    let approx = photonics::delta_from_transmittance(photonics::poisson_pmf(params.mu, 2) / params.mu);
    Ok(CriticalAttenuationReport {
        delta_c_db: delta,
        length_km: photonics::length_from_delta(delta, params.alpha_db_per_km),
        method: CriticalMethod::Bb84Storage,
        approx_delta_c_db: Some(approx),
    })
}

/// Loss beyond which IRUD on three-photon pulses gives Eve every bit:
/// `η_δ μ = p_ok p_3(μ)`.
pub fn critical_attenuation_sarg(params: &ChannelParams) -> Result<CriticalAttenuationReport, EavesdropError> {
    params.validate()?;
    let p_ok = irud_success(3, ProtocolKind::Sarg);
    let delta = photonics::delta_from_transmittance(p_ok * photonics::poisson_pmf(params.mu, 3) / params.mu);
    Ok(CriticalAttenuationReport {
        delta_c_db: delta,
        length_km: photonics::length_from_delta(delta, params.alpha_db_per_km),
        method: CriticalMethod::SargIrud,
        approx_delta_c_db: None,
    })
}

/// Rough threshold for a non-orthogonal encoding with overlap `chi`: the
/// source runs at `μ/(1-χ)` to keep Bob's key rate, and Eve needs three
/// photons and a conclusive USD, `η_δ μ_eff ≃ p_3(μ_eff) p_ok`.
pub fn critical_attenuation_generic(
    mu_bb84: f64,
    chi: f64,
    p_ok: f64,
    params: &ChannelParams,
) -> Result<CriticalAttenuationReport, EavesdropError> {
    if !(0.0..1.0).contains(&chi) {
        return Err(ParamError::Chi(chi).into());
    }
    if !(mu_bb84 > 0.0) {
        return Err(ParamError::Mu(mu_bb84).into());
    }
    let mu_eff = mu_bb84 / (1.0 - chi);
    let delta = if p_ok <= 0.0 {
        f64::INFINITY
    } else {
        photonics::delta_from_transmittance(p_ok.min(1.0) * photonics::poisson_pmf(mu_eff, 3) / mu_eff)
    };
    Ok(CriticalAttenuationReport {
        delta_c_db: delta,
        length_km: photonics::length_from_delta(delta, params.alpha_db_per_km),
        method: CriticalMethod::GenericEstimate,
        approx_delta_c_db: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta1Report {
    /// Exact-sum rate matching, Store(1) on every multi-photon pulse.
    pub exact_db: f64,
    /// Two-photon-dominant form `η_δ μ = p_2`.
    pub approx_db: f64,
}

/// Loss at which Eve can keep one photon from every multi-photon pulse.
pub fn delta_1(params: &ChannelParams) -> Result<Delta1Report, EavesdropError> {
    params.validate()?;
    Ok(Delta1Report {
        exact_db: solve_attenuation(params, store_one_rate(params)),
        approx_db: photonics::delta_from_transmittance(photonics::poisson_pmf(params.mu, 2) / params.mu),
    })
}

/// Attenuation grid `min, min+step, ...` up to `max` inclusive.
pub fn delta_grid(min_db: f64, max_db: f64, step_db: f64) -> Vec<f64> {
    let count = ((max_db - min_db) / step_db + 1e-9).floor() as usize;
    (0..=count).map(|i| min_db + i as f64 * step_db).collect()
}

/// Optimal-attack curve over `deltas`, evaluated in parallel.
pub fn sweep(
    params: &ChannelParams,
    protocol: ProtocolKind,
    deltas: &[f64],
) -> Result<Vec<CurvePoint>, EavesdropError> {
    let model = AttackModel::new(*params, protocol)?;
    deltas.par_iter().map(|&d| model.optimize(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn sarg_params() -> ChannelParams {
        ChannelParams::default().with_mu(0.2)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        // mpmath: H(0.85355) = 0.600884659266...
        assert!((binary_entropy(0.85355) - 0.600884659266669).abs() < 1e-12);
    }

    #[test]
    fn storage_info_values() {
        // mpmath at 30 digits
        assert!((storage_info(1, FRAC_1_SQRT_2) - 0.399123963307144).abs() < 1e-12);
        assert!((storage_info(2, FRAC_1_SQRT_2) - 0.645421097334730).abs() < 1e-12);
        for k in 1..=5 {
            assert_eq!(storage_info(k, 0.0), 1.0);
        }
        for chi in [0.1, 0.5, FRAC_1_SQRT_2, 0.9] {
            let mut prev = 0.0;
            for k in 1..=30 {
                let i = storage_info(k, chi);
                assert!(i > prev || i == 1.0);
                prev = i;
            }
        }
        assert!(storage_info(200, FRAC_1_SQRT_2) > 1.0 - 1e-12);
    }

    #[test]
    fn irud_success_by_photon_number() {
        assert_eq!(irud_success(1, ProtocolKind::Sarg), 0.0);
        assert_eq!(irud_success(2, ProtocolKind::Sarg), 0.0);
        assert!((irud_success(3, ProtocolKind::Sarg) - 0.5).abs() < 1e-12);
        assert!((irud_success(4, ProtocolKind::Sarg) - 0.5).abs() < 1e-12);
        assert_eq!(irud_success(3, ProtocolKind::Bb84), irud_success(3, ProtocolKind::Sarg));
        let mut prev = 0.5;
        for n in 5..=20 {
            let p = irud_success(n, ProtocolKind::Sarg);
            assert!(p >= prev - 1e-12 && p <= 1.0);
            prev = p;
        }
    }

    #[test]
    fn overlap_route_matches_explicit_povm() {
        for n in 1..=MAX_QUBITS {
            assert!((usd_success_from_overlaps(n) - usd_success_explicit(n)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn per_action_information() {
        let chi = FRAC_1_SQRT_2;
        assert_eq!(eve_info_per_action(2, EveAction::Store(1), ProtocolKind::Bb84, chi).unwrap(), Some(1.0));
        let i = eve_info_per_action(2, EveAction::Store(1), ProtocolKind::Sarg, chi).unwrap().unwrap();
        assert!((i - 0.399123963307144).abs() < 1e-12);
        assert_eq!(eve_info_per_action(3, EveAction::ForwardAllLossless, ProtocolKind::Sarg, chi).unwrap(), Some(0.0));
        assert_eq!(eve_info_per_action(3, EveAction::Block, ProtocolKind::Sarg, chi).unwrap(), None);
        assert_eq!(eve_info_per_action(3, EveAction::Irud, ProtocolKind::Sarg, chi).unwrap(), Some(1.0));
        assert!(matches!(
            eve_info_per_action(1, EveAction::Store(1), ProtocolKind::Sarg, chi),
            Err(EavesdropError::Inadmissible { n: 1, .. })
        ));
        assert!(eve_info_per_action(2, EveAction::Irud, ProtocolKind::Sarg, chi).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(AttackPolicy::new(vec![vec![(EveAction::Block, 0.5)]]).is_err());
        assert!(AttackPolicy::new(vec![vec![(EveAction::Block, 1.5), (EveAction::ForwardAllLossless, -0.5)]]).is_err());
        assert!(AttackPolicy::new(vec![vec![(EveAction::Store(1), 1.0)]]).is_err());
        assert!(AttackPolicy::new(vec![vec![(EveAction::Block, 0.25), (EveAction::ForwardAllLossless, 0.75)]]).is_ok());
    }

    #[test]
    fn bob_rates() {
        let p = sarg_params();
        let block = AttackPolicy::uniform(p.n_max, |_| EveAction::Block).unwrap();
        assert_eq!(bob_rate_under_policy(&block, &p), 0.0);
        let fwd = AttackPolicy::uniform(p.n_max, |_| EveAction::ForwardAllLossless).unwrap();
        for d in [0.0, 1.0, 10.0, 30.0] {
            assert!(bob_rate_under_policy(&fwd, &p) >= photonics::raw_rate_at(&p, d));
        }
        // mpmath truncated sum: 0.00186044666782542627...
        assert!((store_one_rate(&p) - 0.001860446667825426).abs() < 1e-16);
    }

    #[test]
    fn zero_loss_leaves_no_room() {
        for (protocol, mu) in [(ProtocolKind::Bb84, 0.1), (ProtocolKind::Sarg, 0.2)] {
            let pt = optimize_policy(&ChannelParams::default().with_mu(mu), protocol, 0.0).unwrap();
            assert!(pt.eve_info <= 1e-9, "{protocol}: {}", pt.eve_info);
        }
    }

    #[test]
    fn critical_values() {
        let bb = critical_attenuation_bb84(&ChannelParams::default()).unwrap();
        // mpmath root of the exact-sum equation: 13.16740085556...
        assert!((bb.delta_c_db - 13.167400855566).abs() < 1e-4);
        assert!((bb.approx_delta_c_db.unwrap() - 13.444594438543).abs() < 1e-9);
        let sg = critical_attenuation_sarg(&sarg_params()).unwrap();
        assert!((sg.delta_c_db - 25.639801511003).abs() < 1e-9);
        assert!((sg.length_km - 102.559206044012).abs() < 1e-8);
        let d1 = delta_1(&sarg_params()).unwrap();
        assert!((d1.exact_db - 10.310084663771).abs() < 1e-4);
        assert!((d1.approx_db - 10.868588963807).abs() < 1e-9);
    }

    #[test]
    fn bb84_threshold_grows_as_mu_falls() {
        let mut prev = f64::INFINITY;
        for mu in [0.05, 0.1, 0.2] {
            let d = critical_attenuation_bb84(&ChannelParams::default().with_mu(mu)).unwrap().delta_c_db;
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn delta_1_grows_as_mu_falls() {
        let d = |mu| delta_1(&ChannelParams::default().with_mu(mu)).unwrap().exact_db;
        assert!(d(0.01) > d(0.05) && d(0.05) > d(0.2));
        assert!(d(0.001) > 30.0);
    }

    #[test]
    fn generic_estimate() {
        let p = ChannelParams::default();
        let g = critical_attenuation_generic(0.1, FRAC_1_SQRT_2, 0.5, &p).unwrap();
        // mpmath: 21.6087729072570538...
        assert!((g.delta_c_db - 21.608772907257).abs() < 1e-9);
        assert_eq!(critical_attenuation_generic(0.1, 0.3, 0.0, &p).unwrap().delta_c_db, f64::INFINITY);
        assert!(critical_attenuation_generic(0.1, 1.0, 0.5, &p).is_err());
    }

    #[test]
    fn grid() {
        let g = delta_grid(0.0, 30.0, 0.5);
        assert_eq!(g.len(), 61);
        assert_eq!(g[60], 30.0);
        assert_eq!(delta_grid(1.0, 1.0, 0.5), vec![1.0]);
    }
}
