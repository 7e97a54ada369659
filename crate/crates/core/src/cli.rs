//! Command implementations behind the `qkd-bench` binary.
//!
//! Every command takes a validated [`RunConfig`] and returns its report as a
//! string plus a pass/fail flag, so the binary only does argument parsing,
//! printing and exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::eavesdrop::{self, AttackModel, CurvePoint, EavesdropError};
use crate::photonics::{self, ChannelParams};
use crate::protocol::{self, ProtocolKind};
use crate::qcore::{self, qubit_state, tensor_power, OutcomeLabel, StateLabel};

/// Length of the weak-pulse link used as the worked 67 km scenario.
pub const SCENARIO_LENGTH_KM: f64 = 67.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<EavesdropError> for CliError {
    fn from(e: EavesdropError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Flat configuration document; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    /// Overrides the protocol's default mean photon number.
    pub mu: Option<f64>,
    pub mu_bb84: f64,
    pub mu_sarg: f64,
    pub eta_det: f64,
    pub alpha_db_per_km: f64,
    pub delta_db: f64,
    pub chi: f64,
    pub n_max: u32,
    pub pulses: u64,
    pub seed: u64,
    pub delta_min_db: f64,
    pub delta_max_db: f64,
    pub delta_step_db: f64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ch = ChannelParams::default();
        Self {
            protocol: ProtocolKind::Sarg,
            mu: None,
            mu_bb84: 0.1,
            mu_sarg: 0.2,
            eta_det: ch.eta_det,
            alpha_db_per_km: ch.alpha_db_per_km,
            delta_db: ch.delta_db,
            chi: ch.chi,
            n_max: ch.n_max,
            pulses: 1_000_000,
            seed: 0,
            delta_min_db: 0.0,
            delta_max_db: 30.0,
            delta_step_db: 0.5,
            output: None,
        }
    }
}

impl RunConfig {
    /// Reads an optional JSON file, then applies `key=value` overrides and
    /// the dedicated `--seed` / `--out` flags.
    pub fn load(
        path: Option<&Path>,
        overrides: &[String],
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let mut doc = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(map)) => map,
                    Ok(_) => return Err(CliError::Config(format!("{}: expected a JSON object", p.display()))),
                    Err(e) => return Err(CliError::Config(format!("{}: {e}", p.display()))),
                }
            }
            None => Map::new(),
        };
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{item}'")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            doc.insert(key.trim().to_string(), value);
        }
        if let Some(seed) = seed {
            doc.insert("seed".into(), Value::from(seed));
        }
        if let Some(out) = out {
            doc.insert("output".into(), Value::String(out.display().to_string()));
        }
        let cfg: RunConfig = serde_json::from_value(Value::Object(doc)).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for protocol in ProtocolKind::ALL {
            self.channel(protocol)
                .validate()
                .map_err(|e| CliError::Validation(format!("{protocol}: {e}")))?;
        }
        if self.pulses == 0 {
            return Err(CliError::Validation("pulses must be at least 1".into()));
        }
        if !(self.delta_step_db > 0.0) {
            return Err(CliError::Validation(format!("delta_step_db must be positive, got {}", self.delta_step_db)));
        }
        if !(self.delta_min_db >= 0.0 && self.delta_max_db >= self.delta_min_db && self.delta_max_db.is_finite()) {
            return Err(CliError::Validation(format!(
                "empty sweep range [{}, {}]",
                self.delta_min_db, self.delta_max_db
            )));
        }
        if !(self.alpha_db_per_km > 0.0) {
            return Err(CliError::Validation("alpha_db_per_km must be positive".into()));
        }
        Ok(())
    }

    pub fn mu_for(&self, protocol: ProtocolKind) -> f64 {
        match (self.mu, protocol) {
            (Some(mu), p) if p == self.protocol => mu,
            (_, ProtocolKind::Bb84) => self.mu_bb84,
            (_, ProtocolKind::Sarg) => self.mu_sarg,
        }
    }

    pub fn channel(&self, protocol: ProtocolKind) -> ChannelParams {
        ChannelParams {
            mu: self.mu_for(protocol),
            eta_det: self.eta_det,
            alpha_db_per_km: self.alpha_db_per_km,
            delta_db: self.delta_db,
            chi: self.chi,
            n_max: self.n_max,
        }
    }
}

/// Rendered report and whether the command's checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub text: String,
    pub ok: bool,
}

fn line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key:<30} {value}");
}

pub fn cmd_rates(cfg: &RunConfig) -> CommandOutput {
    let p = cfg.channel(cfg.protocol);
    let mut out = String::new();
    line(&mut out, "protocol", cfg.protocol);
    line(&mut out, "mu", format!("{:.6}", p.mu));
    line(&mut out, "eta_det", format!("{:.6}", p.eta_det));
    line(&mut out, "delta_db", format!("{:.6}", p.delta_db));
    line(&mut out, "length_km", format!("{:.6}", p.length_km()));
    line(&mut out, "eta_delta", format!("{:.6}", p.transmittance()));
    for n in 0..=6 {
        line(&mut out, &format!("p_{n}"), format!("{:.6e}", photonics::poisson_pmf(p.mu, n)));
    }
    line(&mut out, "raw_rate_exact", format!("{:.6e}", photonics::raw_rate_exact(&p)));
    line(&mut out, "raw_rate_approx", format!("{:.6e}", photonics::raw_rate_approx(&p)));
    CommandOutput { text: out, ok: true }
}

/// Thresholds quoted by `critical`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSummary {
    pub bb84: eavesdrop::CriticalAttenuationReport,
    pub sarg: eavesdrop::CriticalAttenuationReport,
    /// Loss at which the rate-matching LP first gives Eve every SARG bit.
    pub sarg_full_information_db: f64,
    pub generic: eavesdrop::CriticalAttenuationReport,
    pub delta_1: eavesdrop::Delta1Report,
    pub scenario_delta_db: f64,
    pub scenario_bb84: CurvePoint,
    pub scenario_sarg: CurvePoint,
}

pub fn critical_summary(cfg: &RunConfig) -> Result<CriticalSummary, CliError> {
    let bb = cfg.channel(ProtocolKind::Bb84);
    let sg = cfg.channel(ProtocolKind::Sarg);
    let p_ok = eavesdrop::irud_success(3, ProtocolKind::Sarg);
    let scenario_delta_db = photonics::delta_from_length(SCENARIO_LENGTH_KM, cfg.alpha_db_per_km);
    let sarg_model = AttackModel::new(sg, ProtocolKind::Sarg)?;
    Ok(CriticalSummary {
        bb84: eavesdrop::critical_attenuation_bb84(&bb)?,
        sarg: eavesdrop::critical_attenuation_sarg(&sg)?,
        sarg_full_information_db: sarg_model.full_information_delta(),
        generic: eavesdrop::critical_attenuation_generic(bb.mu, cfg.chi, p_ok, &bb)?,
        delta_1: eavesdrop::delta_1(&sg)?,
        scenario_delta_db,
        scenario_bb84: eavesdrop::optimize_policy(&bb, ProtocolKind::Bb84, scenario_delta_db)?,
        scenario_sarg: sarg_model.optimize(scenario_delta_db)?,
    })
}

pub fn cmd_critical(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let s = critical_summary(cfg)?;
    let f = |x: f64| format!("{x:.6}");
    let mut out = String::new();
    line(&mut out, "mu_bb84", f(cfg.mu_bb84));
    line(&mut out, "mu_sarg", f(cfg.mu_sarg));
    line(&mut out, "eta_det", f(cfg.eta_det));
    line(&mut out, "alpha_db_per_km", f(cfg.alpha_db_per_km));
    line(&mut out, "bb84_delta_c_db", f(s.bb84.delta_c_db));
    line(&mut out, "bb84_delta_c_approx_db", f(s.bb84.approx_delta_c_db.unwrap_or(f64::NAN)));
    line(&mut out, "bb84_length_km", f(s.bb84.length_km));
    line(&mut out, "sarg_delta_c_db", f(s.sarg.delta_c_db));
    line(&mut out, "sarg_length_km", f(s.sarg.length_km));
    line(&mut out, "sarg_full_information_db", f(s.sarg_full_information_db));
    line(&mut out, "sarg_to_bb84_ratio", f(s.sarg.delta_c_db / s.bb84.delta_c_db));
    line(&mut out, "generic_delta_c_db", f(s.generic.delta_c_db));
    line(&mut out, "generic_gain_over_bb84_db", f(s.generic.delta_c_db - s.bb84.delta_c_db));
    line(&mut out, "generic_length_km", f(s.generic.length_km));
    line(&mut out, "delta_1_exact_db", f(s.delta_1.exact_db));
    line(&mut out, "delta_1_approx_db", f(s.delta_1.approx_db));
    line(&mut out, "scenario_length_km", f(SCENARIO_LENGTH_KM));
    line(&mut out, "scenario_delta_db", f(s.scenario_delta_db));
    line(&mut out, "scenario_bb84_eve_info", f(s.scenario_bb84.eve_info));
    line(&mut out, "scenario_sarg_eve_info", f(s.scenario_sarg.eve_info));
    Ok(CommandOutput { text: out, ok: true })
}

pub const CSV_HEADER: &str = "delta_db,protocol,eve_info,dominant_action";

/// Optimal-attack curves for both protocols as CSV, one row per (δ, protocol).
pub fn sweep_csv(cfg: &RunConfig) -> Result<String, CliError> {
    let deltas = eavesdrop::delta_grid(cfg.delta_min_db, cfg.delta_max_db, cfg.delta_step_db);
    let bb = eavesdrop::sweep(&cfg.channel(ProtocolKind::Bb84), ProtocolKind::Bb84, &deltas)?;
    let sg = eavesdrop::sweep(&cfg.channel(ProtocolKind::Sarg), ProtocolKind::Sarg, &deltas)?;
    let mut csv = String::with_capacity(64 * (deltas.len() * 2 + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for (b, s) in bb.iter().zip(&sg) {
        for (protocol, pt) in [(ProtocolKind::Bb84, b), (ProtocolKind::Sarg, s)] {
            let _ = writeln!(csv, "{:.6},{},{:.6},{}", pt.delta_db, protocol, pt.eve_info, pt.dominant_action);
        }
    }
    Ok(csv)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let csv = sweep_csv(cfg)?;
    match &cfg.output {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let rows = csv.lines().count() - 1;
            Ok(CommandOutput {
                text: format!("wrote {rows} rows to {}\n", path.display()),
                ok: true,
            })
        }
        None => Ok(CommandOutput { text: csv, ok: true }),
    }
}

/// Largest sift-ratio deviation accepted by `session`, in standard errors.
pub const SESSION_SIGMA: f64 = 5.0;

pub fn cmd_session(cfg: &RunConfig) -> CommandOutput {
    let p = cfg.channel(cfg.protocol);
    let stats = protocol::run_session(&p, cfg.protocol, cfg.pulses, cfg.seed);
    let expected = protocol::sift_ratio_analytic(cfg.protocol);
    let se = stats.sift_ratio_std_error(expected);
    let z = if se > 0.0 { (stats.sift_ratio - expected) / se } else { 0.0 };
    let ok = stats.qber == 0.0 && stats.bob_detections > 0 && z.abs() <= SESSION_SIGMA;
    let mut out = String::new();
    line(&mut out, "protocol", cfg.protocol);
    line(&mut out, "mu", format!("{:.6}", p.mu));
    line(&mut out, "delta_db", format!("{:.6}", p.delta_db));
    line(&mut out, "seed", cfg.seed);
    line(&mut out, "pulses_sent", stats.pulses_sent);
    line(&mut out, "bob_detections", stats.bob_detections);
    line(&mut out, "sifted_bits", stats.sifted_bits);
    line(&mut out, "errors", stats.errors);
    line(&mut out, "qber", format!("{:.6}", stats.qber));
    line(&mut out, "detection_rate", format!("{:.6e}", stats.detection_rate()));
    line(&mut out, "raw_rate_exact", format!("{:.6e}", photonics::raw_rate_exact(&p)));
    line(&mut out, "sift_ratio", format!("{:.6}", stats.sift_ratio));
    line(&mut out, "sift_ratio_expected", format!("{expected:.6}"));
    line(&mut out, "sift_ratio_z", format!("{z:.6}"));
    line(&mut out, "net_key_rate", format!("{:.6e}", stats.net_key_rate));
    line(&mut out, "status", if ok { "pass" } else { "fail" });
    CommandOutput { text: out, ok }
}

/// Checks on the three-photon USD measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmVerification {
    pub photons: u32,
    pub p_ok: f64,
    pub gram_eigenvalues: Vec<f64>,
    /// Largest `<ψ_j|E_i|ψ_j>` over `i ≠ j`.
    pub max_cross_term: f64,
    /// Largest `|<ψ_i|E_i|ψ_i> - p_ok|`.
    pub max_success_deviation: f64,
    pub hermiticity: f64,
    pub negativity: f64,
    pub completeness: f64,
}

impl PovmVerification {
    pub const EXPECTED_P_OK: f64 = 0.5;
    pub const EXPECTED_GRAM: [f64; 4] = [0.5, 0.5, 1.5, 1.5];

    pub fn passes(&self) -> bool {
        let tol = qcore::PSD_TOL;
        (self.p_ok - Self::EXPECTED_P_OK).abs() <= 1e-9
            && self.gram_eigenvalues.len() == 4
            && self
                .gram_eigenvalues
                .iter()
                .zip(Self::EXPECTED_GRAM)
                .all(|(a, b)| (a - b).abs() <= 1e-9)
            && self.max_cross_term <= tol
            && self.max_success_deviation <= tol
            && self.hermiticity <= tol
            && self.negativity <= tol
            && self.completeness <= tol
    }
}

pub fn verify_usd_povm(photons: u32) -> Result<PovmVerification, qcore::QcoreError> {
    let states = [StateLabel::PlusZ, StateLabel::PlusX, StateLabel::MinusZ, StateLabel::MinusX]
        .iter()
        .map(|&l| tensor_power(&qubit_state(l), photons))
        .collect::<Result<Vec<_>, _>>()?;
    let usd = qcore::build_usd_povm(&states)?;
    let mut max_cross_term = 0.0f64;
    let mut max_success_deviation = 0.0f64;
    for (j, psi) in states.iter().enumerate() {
        for i in 0..states.len() {
            let p = usd.povm.probability(OutcomeLabel::Conclusive(i), psi)?;
            if i == j {
                max_success_deviation = max_success_deviation.max((p - usd.p_ok).abs());
            } else {
                max_cross_term = max_cross_term.max(p.abs());
            }
        }
    }
    let r = usd.povm.residuals();
    Ok(PovmVerification {
        photons,
        p_ok: usd.p_ok,
        gram_eigenvalues: usd.gram_eigenvalues,
        max_cross_term,
        max_success_deviation,
        hermiticity: r.hermiticity,
        negativity: r.negativity,
        completeness: r.completeness,
    })
}

pub fn cmd_povm_verify(_cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let v = verify_usd_povm(3).map_err(|e| CliError::Validation(e.to_string()))?;
    let ok = v.passes();
    let mut out = String::new();
    line(&mut out, "photons", v.photons);
    line(&mut out, "p_ok", format!("{:.6}", v.p_ok));
    let eig: Vec<String> = v.gram_eigenvalues.iter().map(|e| format!("{e:.6}")).collect();
    line(&mut out, "gram_eigenvalues", eig.join(" "));
    line(&mut out, "max_cross_term", format!("{:.6e}", v.max_cross_term));
    line(&mut out, "max_success_deviation", format!("{:.6e}", v.max_success_deviation));
    line(&mut out, "hermiticity_residual", format!("{:.6e}", v.hermiticity));
    line(&mut out, "negativity_residual", format!("{:.6e}", v.negativity));
    line(&mut out, "completeness_residual", format!("{:.6e}", v.completeness));
    line(&mut out, "status", if ok { "pass" } else { "fail" });
    Ok(CommandOutput { text: out, ok })
}
