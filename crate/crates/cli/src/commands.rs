//! The check, certify, bounds and simulate pipelines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use delaystab::rates::{
    beta_bound, eta_bound, mu_condition_check, theta_bound, xi_bound, RateOptions,
};
use delaystab::simulate::history_depth;
use delaystab::{
    check_system, envelope_check, find_certificate_linear, find_certificate_nonlinear,
    level_set_descent, simulate_continuous, simulate_discrete, verify_certificate, Certificate,
    DecayBound, DecayForm, EnvelopeReport, Error, Lyapunov, MuSpec, TimeKind, Trajectory, Verdict,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Experiment, RateKind};
use crate::error::{CliError, EXIT_NEGATIVE, EXIT_OK, EXIT_UNDETERMINED};

/// A machine-readable report and the exit status it implies.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: u8,
    pub report: Value,
}

fn outcome(code: u8, report: impl Serialize) -> Result<Outcome, CliError> {
    let report =
        serde_json::to_value(report).map_err(|e| CliError::io("serialising report", e.into()))?;
    Ok(Outcome { code, report })
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_NEGATIVE,
        Verdict::Undetermined => EXIT_UNDETERMINED,
    }
}

#[derive(Serialize)]
struct CheckReport {
    command: &'static str,
    overall: Verdict,
    #[serde(flatten)]
    report: delaystab::HypothesisReport,
}

/// Checks every structural hypothesis of the model and its delays.
pub fn check(exp: &Experiment) -> Result<Outcome, CliError> {
    let report = check_system(&exp.model, &exp.delays, &exp.sample_spec(), exp.sim.horizon)?;
    let overall = report.overall();
    outcome(
        verdict_code(overall),
        CheckReport {
            command: "check",
            overall,
            report,
        },
    )
}

/// How a certificate request ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    /// A valid certificate is available.
    Valid,
    /// The user-supplied vector fails the strict inequality.
    Invalid,
    /// The linear stability test fails, so no certificate exists.
    Absent,
    /// The nonlinear search ran out of budget.
    NotFound,
}

impl CertificateStatus {
    fn code(self) -> u8 {
        match self {
            CertificateStatus::Valid => EXIT_OK,
            CertificateStatus::Invalid | CertificateStatus::Absent => EXIT_NEGATIVE,
            CertificateStatus::NotFound => EXIT_UNDETERMINED,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateOutcome {
    pub status: CertificateStatus,
    pub method: &'static str,
    pub certificate: Option<Certificate>,
}

/// Verifies the configured `v`, or searches for one.
pub fn resolve_certificate(exp: &Experiment) -> Result<CertificateOutcome, CliError> {
    let cfg = exp.search_config();
    if let Some(v) = &exp.certificate {
        let cert = verify_certificate(&exp.model, v, cfg.tolerance)?;
        let status = if cert.valid {
            CertificateStatus::Valid
        } else {
            CertificateStatus::Invalid
        };
        return Ok(CertificateOutcome {
            status,
            method: "verify",
            certificate: Some(cert),
        });
    }
    if let Some((a, b)) = exp.model.as_linear() {
        let found = find_certificate_linear(&a, &b, exp.model.kind(), cfg.tolerance)?;
        let status = if found.is_some() {
            CertificateStatus::Valid
        } else {
            CertificateStatus::Absent
        };
        return Ok(CertificateOutcome {
            status,
            method: "linear_solve",
            certificate: found,
        });
    }
    let found = find_certificate_nonlinear(&exp.model, &cfg)?;
    let status = if found.is_some() {
        CertificateStatus::Valid
    } else {
        CertificateStatus::NotFound
    };
    Ok(CertificateOutcome {
        status,
        method: "ray_search",
        certificate: found,
    })
}

#[derive(Serialize)]
struct CertifyReport {
    command: &'static str,
    #[serde(flatten)]
    outcome: CertificateOutcome,
}

pub fn certify(exp: &Experiment) -> Result<Outcome, CliError> {
    let res = resolve_certificate(exp)?;
    outcome(
        res.status.code(),
        CertifyReport {
            command: "certify",
            outcome: res,
        },
    )
}

/// One requested decay rate and its result.
#[derive(Clone, Debug, Serialize)]
pub struct RateEntry {
    pub requested: RateKind,
    pub rate: Option<RateKind>,
    pub bound: Option<DecayBound>,
    /// Whether the rate satisfies the growth condition for every delay.
    pub mu_condition: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip)]
    pub code: u8,
}

fn tau_sup(exp: &Experiment) -> Option<f64> {
    exp.analysis.tau_sup.or_else(|| {
        exp.delays
            .iter()
            .map(|d| d.sup())
            .try_fold(0.0, |acc: f64, s| s.map(|s| acc.max(s)))
    })
}

fn alpha(exp: &Experiment) -> Option<f64> {
    exp.analysis.alpha.or_else(|| {
        if exp.delays.is_empty() {
            return None;
        }
        exp.delays
            .iter()
            .map(|d| d.proportional_ratio())
            .try_fold(0.0, |acc: f64, a| a.map(|a| acc.max(a)))
    })
}

fn auto_rate(exp: &Experiment) -> Option<RateKind> {
    let homogeneous_zero = exp.model.degree() == 0.0;
    match exp.model.kind() {
        TimeKind::Continuous => match (tau_sup(exp), alpha(exp)) {
            (Some(_), _) if homogeneous_zero => Some(RateKind::Eta),
            (Some(_), _) => Some(RateKind::Theta),
            (None, Some(_)) if homogeneous_zero => Some(RateKind::Xi),
            (None, Some(_)) => Some(RateKind::Beta),
            (None, None) => None,
        },
        TimeKind::Discrete => alpha(exp).map(|_| RateKind::Xi),
    }
}

fn mu_spec(bound: &DecayBound) -> MuSpec {
    match bound.form {
        DecayForm::Exponential { eta } => MuSpec::Exponential { eta },
        DecayForm::PolynomialReciprocal { theta, exponent } => {
            MuSpec::PolynomialReciprocal { theta, exponent }
        }
        DecayForm::PowerRate { exponent } => MuSpec::PowerRate { xi: exponent },
    }
}

fn missing(what: &str, rate: RateKind) -> CliError {
    CliError::Config(format!(
        "rate {rate:?} needs {what}; the delays do not provide it, set analysis.{what}"
    ))
}

fn compute_rate(exp: &Experiment, v: &[f64], rate: RateKind) -> Result<DecayBound, CliError> {
    let opts = RateOptions::default();
    let m = &exp.model;
    let bound = match rate {
        RateKind::Eta => eta_bound(
            m,
            v,
            tau_sup(exp).ok_or_else(|| missing("tau_sup", rate))?,
            &opts,
        )?,
        RateKind::Theta => theta_bound(
            m,
            v,
            tau_sup(exp).ok_or_else(|| missing("tau_sup", rate))?,
            &opts,
        )?,
        RateKind::Xi => xi_bound(
            m,
            v,
            alpha(exp).ok_or_else(|| missing("alpha", rate))?,
            &opts,
        )?,
        RateKind::Beta => beta_bound(
            m,
            v,
            alpha(exp).ok_or_else(|| missing("alpha", rate))?,
            &opts,
        )?,
        RateKind::Auto => unreachable!("auto is resolved before computing"),
    };
    Ok(bound)
}

fn rate_entry(exp: &Experiment, v: &[f64], requested: RateKind) -> RateEntry {
    let rate = match requested {
        RateKind::Auto => auto_rate(exp),
        r => Some(r),
    };
    let Some(rate) = rate else {
        return RateEntry {
            requested,
            rate: None,
            bound: None,
            mu_condition: None,
            note: Some("no rate applies to this time kind and delay structure".into()),
            code: EXIT_UNDETERMINED,
        };
    };
    match compute_rate(exp, v, rate) {
        Ok(bound) => {
            let spec = mu_spec(&bound);
            let mu_condition = (!exp.delays.is_empty())
                .then(|| {
                    exp.delays
                        .iter()
                        .map(|d| mu_condition_check(&exp.model, v, &spec, d))
                        .collect::<Result<Vec<bool>, Error>>()
                        .ok()
                        .map(|oks| oks.into_iter().all(|ok| ok))
                })
                .flatten();
            RateEntry {
                requested,
                rate: Some(rate),
                bound: Some(bound),
                mu_condition,
                note: None,
                code: EXIT_OK,
            }
        }
        Err(e) => RateEntry {
            requested,
            rate: Some(rate),
            bound: None,
            mu_condition: None,
            code: e.exit_code(),
            note: Some(e.to_string()),
        },
    }
}

/// Computes every requested rate for a valid certificate `v`.
pub fn compute_bounds(exp: &Experiment, v: &[f64]) -> Vec<RateEntry> {
    exp.analysis
        .bounds
        .iter()
        .map(|&r| rate_entry(exp, v, r))
        .collect()
}

#[derive(Serialize)]
struct BoundsReport {
    command: &'static str,
    certificate: CertificateOutcome,
    bounds: Vec<RateEntry>,
}

pub fn bounds(exp: &Experiment) -> Result<Outcome, CliError> {
    let cert = resolve_certificate(exp)?;
    let (entries, code) = match (&cert.status, &cert.certificate) {
        (CertificateStatus::Valid, Some(c)) => {
            let entries = compute_bounds(exp, &c.v);
            let code = entries.iter().map(|e| e.code).max().unwrap_or(EXIT_OK);
            (entries, code)
        }
        _ => (Vec::new(), cert.status.code()),
    };
    outcome(
        code,
        BoundsReport {
            command: "bounds",
            certificate: cert,
            bounds: entries,
        },
    )
}

#[derive(Serialize)]
struct SimulateReport {
    command: &'static str,
    out: String,
    samples: usize,
    final_time: Option<f64>,
    final_state: Option<Vec<f64>>,
    diverged_at: Option<f64>,
    positivity_violations: usize,
    min_component: f64,
    v: Vec<f64>,
    v_source: &'static str,
    bound: Option<DecayBound>,
    envelope: Option<EnvelopeReport>,
    level_set_entries: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

fn run(exp: &Experiment) -> Result<(Trajectory, Option<f64>), CliError> {
    let history = exp
        .history
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs initial_history".into()))?;
    let result = match exp.model.kind() {
        TimeKind::Continuous => {
            simulate_continuous(&exp.model, &exp.delays, history, exp.sim.h, exp.sim.horizon)
        }
        TimeKind::Discrete => simulate_discrete(&exp.model, &exp.delays, history, exp.steps()?),
    };
    match result {
        Ok(traj) => Ok((traj, None)),
        Err(Error::Diverged { time, trajectory }) => Ok((*trajectory, Some(time))),
        Err(e) => Err(e.into()),
    }
}

/// Integrates the experiment, writes the CSV to `out` and checks the envelope.
pub fn simulate(exp: &Experiment, out: &Path) -> Result<Outcome, CliError> {
    let (traj, diverged_at) = run(exp)?;
    let mut notes = Vec::new();

    let cert = match resolve_certificate(exp) {
        Ok(c) => Some(c),
        Err(e) => {
            notes.push(format!("no certificate: {e}"));
            None
        }
    };
    let (v, v_source, valid) = match cert
        .as_ref()
        .and_then(|c| c.certificate.as_ref().map(|x| (c, x)))
    {
        Some((c, x)) => (x.v.clone(), c.method, c.status == CertificateStatus::Valid),
        None => {
            notes.push("no certificate available; V uses v = (1, ..., 1)".into());
            (vec![1.0; exp.model.n()], "ones", false)
        }
    };
    if !valid && v_source != "ones" {
        notes.push("the certificate is not valid; no decay bound applies".into());
    }
    let dilation = exp.model.dilation();
    let lyap = Lyapunov::new(&v, dilation)?;

    let mut bound = None;
    if valid {
        for entry in compute_bounds(exp, &v) {
            match entry.bound {
                Some(b) => {
                    bound = Some(b);
                    break;
                }
                None => notes.extend(entry.note),
            }
        }
    }

    let mut envelope = None;
    let mut levels = None;
    if diverged_at.is_none() {
        if let Some(b) = bound.as_mut() {
            let report = envelope_check(&traj, b, &v, dilation, exp.analysis.settle_fraction)?;
            b.envelope_constant = Some(report.m_fit);
            envelope = Some(report);
        }
        if exp.analysis.gamma > 0.0 {
            if let Some(history) = &exp.history {
                let depth = history_depth(&exp.delays)?;
                let phi_norm = history.sup_norm(&lyap, depth)?;
                if phi_norm > 0.0 {
                    levels = Some(level_set_descent(
                        &traj,
                        &v,
                        dilation,
                        exp.analysis.gamma,
                        phi_norm,
                    )?);
                }
            }
        }
    }

    let file =
        File::create(out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
    let mut w = BufWriter::new(file);
    traj.write_csv(&mut w, Some(&lyap), bound.as_ref())
        .and_then(|()| w.flush())
        .map_err(|e| CliError::io(format!("writing {}", out.display()), e))?;

    let code = if diverged_at.is_some() || envelope.as_ref().is_some_and(|e| !e.holds) {
        EXIT_NEGATIVE
    } else {
        EXIT_OK
    };
    let report = SimulateReport {
        command: "simulate",
        out: out.display().to_string(),
        samples: traj.len(),
        final_time: traj.times.last().copied(),
        final_state: traj.last_state().map(<[f64]>::to_vec),
        diverged_at,
        positivity_violations: traj.positivity_violations.len(),
        min_component: traj.min_component(),
        v,
        v_source,
        bound,
        envelope,
        level_set_entries: levels,
        notes,
    };
    outcome(code, report)
}
