//! JSON report shapes. Exact rationals travel as strings; floats are
//! renderings, never the ground truth.

use boldplay_core::chain::GameParams;
use boldplay_core::interval::ProbIntervalRepr;
use boldplay_core::linear_form::LinearForm;
use boldplay_core::reachability::NotInSCertificate;
use serde::Serialize;

/// Common wrapper: version + command echo + payload + runtime. The
/// runtime field is the one part exempt from byte-determinism.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub version: &'a str,
    pub command: &'a str,
    pub result: &'a T,
    pub runtime_ms: u128,
}

/// Echo of the resolved game parameters (and query fortune, if any).
#[derive(Serialize)]
pub struct QueryEcho {
    pub ell: String,
    pub ell_float: f64,
    pub w: String,
    pub fortune: Option<LinearForm>,
    pub fortune_float: Option<f64>,
}

impl QueryEcho {
    pub fn new(params: &GameParams, fortune: Option<&LinearForm>) -> Self {
        QueryEcho {
            ell: params.ell().to_string(),
            ell_float: params.ell().to_f64(),
            w: params.win_prob().to_string(),
            fortune: fortune.cloned(),
            fortune_float: fortune.map(|f| f.to_f64(params.ell())),
        }
    }
}

#[derive(Serialize)]
pub struct QReport {
    pub query: QueryEcho,
    pub interval: ProbIntervalRepr,
    pub states_explored: usize,
    pub frontier_states: usize,
    pub depth: u32,
    pub sweeps: u32,
    pub state_cap_hit: bool,
    pub target_met: bool,
}

#[derive(Serialize)]
pub struct ReachReport {
    pub query: QueryEcho,
    pub verdict: String,
    pub witness: Option<String>,
    pub certificate: Option<NotInSCertificate>,
    pub search_depth: u32,
}

#[derive(Serialize)]
pub struct CounterexampleReport {
    pub ell: String,
    pub m: u32,
    pub d: u32,
    pub n: u32,
    pub f0: LinearForm,
    pub f0_float: f64,
    pub witness: String,
    pub witness_length: usize,
    /// Whether `2^-d (1-ℓ) + nℓ` lands in (1-2ℓ, 1-ℓ).
    pub band_reading_unit_coefficient: bool,
    /// Whether `2^-d (1-mℓ) + nℓ` lands in (1-2ℓ, 1-ℓ).
    pub band_reading_m_coefficient: bool,
}

#[derive(Serialize)]
pub struct SearchExhaustedReport {
    pub attempts: usize,
    pub best_margin_float: Option<f64>,
}

#[derive(Serialize)]
pub struct LemmaGridRow {
    pub ell: String,
    pub w: String,
    pub consistency_ok: bool,
    pub lemmas_ok: bool,
    pub schedule_ok: bool,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct LemmaCheckReport {
    pub rows: Vec<LemmaGridRow>,
    pub all_pass: bool,
    pub n_max: u32,
}
