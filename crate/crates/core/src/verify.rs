//! Verification suites run by the command-line tool.
//!
//! Every suite returns [`CheckResult`]s whose `data` payload is a pure function
//! of the [`RunConfig`]; timings live next to the payload and are left out of
//! serialized reports unless asked for, so reports are byte-for-byte
//! reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cohomology::{binomial, d_squared_witness, report_for, CohomologyReport};
use crate::error::{Error, Result};
use crate::exact::MatZ;
use crate::lie::{build_u, commutator_divisors, LieAlgebra};
use crate::rep::{adjoint_character, decompose, tensor_character, wedge_character, Decomposition};
use crate::series::{lift_traceless, ElementSampler, TruncMatQ};

/// Deliberate corruption used to exercise failure paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Shift one structure constant of every `u_l` before checking it.
    StructureConstant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub l_max: usize,
    pub r: usize,
    pub seed: u64,
    pub samples: usize,
    /// Worker threads; results do not depend on it, so reports omit it.
    #[serde(skip)]
    pub threads: usize,
    /// Cohomology checks are skipped when `dim Λ^3 u_l` exceeds this.
    pub max_cochains: usize,
    pub fault: Option<Fault>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            l_max: 3,
            r: 4,
            seed: 7,
            samples: 50,
            threads: 1,
            max_cochains: 2_000_000,
            fault: None,
        }
    }
}

/// Invalid run parameters. Callers map this to a usage error.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError(m.to_string()));
        if self.n < 2 {
            return fail("n must be at least 2");
        }
        if self.l_max < 2 {
            return fail("l-max must be at least 2");
        }
        if self.r < 2 {
            return fail("r must be at least 2");
        }
        if self.samples < 1 {
            return fail("samples must be at least 1");
        }
        if self.threads < 1 {
            return fail("threads must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check_id: String,
    pub params: BTreeMap<String, Value>,
    pub status: Status,
    pub data: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl CheckResult {
    fn new(id: &str, params: Value, status: Status, data: Value, start: Instant) -> Self {
        let params = match params {
            Value::Object(m) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        CheckResult {
            check_id: id.to_string(),
            params,
            status,
            data,
            elapsed_ms: Some(start.elapsed().as_millis() as u64),
        }
    }

    fn error(id: &str, params: Value, err: &Error, start: Instant) -> Self {
        Self::new(
            id,
            params,
            Status::Fail,
            json!({ "error": err.to_string() }),
            start,
        )
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Runs `f` on a dedicated pool with the given number of worker threads.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Inconsistent(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

// ---------------------------------------------------------------------------
// Congruence filtration

fn filtration_data(cfg: &RunConfig) -> Result<(bool, Value)> {
    let (n, r) = (cfg.n, cfg.r);
    let mut sampler = ElementSampler::new(cfg.seed, n, r);
    let mut commutator_ok = 0usize;
    let mut additive_ok = 0usize;
    let mut traceless_ok = 0usize;
    let mut kernel_ok = 0usize;
    let mut power_ok = 0usize;
    let mut witness: Option<Value> = None;

    for s in 0..cfg.samples {
        let (x, i) = sampler.integral_any();
        let (y, j) = sampler.integral_any();
        let c = x.commutator(&y)?;
        let level = c.filtration_level()?;
        if level >= (i + j).min(r) && c.is_special_linear() {
            commutator_ok += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "commutator", "x": x, "y": y,
                "levels": [i, j], "commutator_level": level}));
        }

        // Same-level pair for additivity of rho_i.
        let x2 = sampler.integral(i);
        let sum = x.rho(i)?.add(&x2.rho(i)?)?;
        let prod = x.mul(&x2)?.rho(i)?;
        if prod == sum {
            additive_ok += 1;
        } else if witness.is_none() {
            witness =
                Some(json!({"sample": s, "check": "additivity", "x": x, "y": x2, "degree": i}));
        }

        if x.rho(i)?.trace().is_zero() {
            traceless_ok += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "traceless", "x": x, "degree": i}));
        }

        // rho_d vanishes exactly when the element lies one level deeper.
        let lx = x.filtration_level()?;
        let kernel = (1..r.min(lx + 1)).all(|d| match x.rho(d) {
            Ok(m) => m.is_zero() == (lx > d),
            Err(_) => false,
        });
        // No torsion modulo deeper levels: x^m lies exactly as deep as x.
        let m = sampler.exponent(2, 5);
        if x.pow(m)?.filtration_level()? == lx {
            power_ok += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "power_level", "x": x, "m": m}));
        }

        if kernel {
            kernel_ok += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "kernel", "x": x}));
        }
    }

    // Surjectivity: every traceless integral matrix is hit in every degree.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut surj = Vec::new();
    let mut surj_ok = true;
    for i in 1..r {
        let mut m = MatZ::from_fn(n, n, |_, _| BigInt::from(rng.gen_range(-3i64..=3)));
        let tr = m.trace();
        m[(n - 1, n - 1)] -= tr;
        let x = lift_traceless(&m, i, r)?;
        let ok = x.is_special_linear() && x.filtration_level()? >= i && x.rho(i)? == m;
        surj_ok &= ok;
        surj.push(json!({"degree": i, "target": m, "preimage": x, "ok": ok}));
    }

    let n_s = cfg.samples;
    let ok = commutator_ok == n_s
        && additive_ok == n_s
        && traceless_ok == n_s
        && kernel_ok == n_s
        && power_ok == n_s
        && surj_ok;
    let mut data = json!({
        "pairs": n_s,
        "commutator_level_ok": commutator_ok,
        "rho_additive_ok": additive_ok,
        "rho_traceless_ok": traceless_ok,
        "rho_kernel_ok": kernel_ok,
        "power_level_ok": power_ok,
        "surjectivity": surj,
    });
    if let Some(w) = witness {
        data["witness"] = w;
    }
    Ok((ok, data))
}

pub fn verify_filtration(cfg: &RunConfig) -> CheckResult {
    let start = Instant::now();
    let params = json!({"n": cfg.n, "r": cfg.r, "seed": cfg.seed, "samples": cfg.samples});
    match filtration_data(cfg) {
        Ok((ok, data)) => CheckResult::new("filtration", params, status(ok), data, start),
        Err(e) => CheckResult::error("filtration", params, &e, start),
    }
}

// ---------------------------------------------------------------------------
// Roots of unipotent elements

fn lcm_of_denominators(x: &TruncMatQ) -> BigInt {
    x.coeffs()
        .iter()
        .flat_map(|m| m.entries().iter())
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
}

fn roots_data(cfg: &RunConfig) -> Result<(bool, Value)> {
    let (n, r) = (cfg.n, cfg.r);
    let mut sampler = ElementSampler::new(cfg.seed, n, r);
    let mut power_ok = 0usize;
    let mut routes_agree = 0usize;
    let mut trivial_ok = 0usize;
    let mut witness: Option<Value> = None;
    let mut by_m: BTreeMap<i64, usize> = BTreeMap::new();

    for s in 0..cfg.samples {
        let y = sampler.rational_unipotent();
        let m = sampler.exponent(2, 6);
        *by_m.entry(m).or_default() += 1;
        let x = y.nth_root(m)?;
        if x.pow(m)? == y {
            power_ok += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "power", "y": y, "m": m, "root": x}));
        }
        if y.nth_root_via_log(m)? == x {
            routes_agree += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "uniqueness", "y": y, "m": m}));
        }
        if y.nth_root(1)? == y {
            trivial_ok += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "first_root", "y": y}));
        }
    }
    let id = TruncMatQ::identity(n, r);
    let identity_ok = (2..=6).all(|m| id.nth_root(m).map(|x| x.is_identity()).unwrap_or(false));

    // Every element of the rational unipotent group has an integral power;
    // at r = 2 the least such exponent is the lcm of the denominators.
    let mut div_sampler = ElementSampler::new(cfg.seed.wrapping_add(1), n, 2);
    let mut divisibility_ok = 0usize;
    let div_samples = cfg.samples.min(50);
    for s in 0..div_samples {
        let x = div_sampler.rational_unipotent();
        let d = lcm_of_denominators(&x);
        let e: i64 = (&d)
            .try_into()
            .map_err(|_| Error::OutOfRange("denominator".into()))?;
        let integral = x.pow(e)?.to_integer().is_some();
        let minimal = (1..e)
            .all(|k| e % k != 0 || x.pow(k).map(|p| p.to_integer().is_none()).unwrap_or(false));
        if integral && minimal {
            divisibility_ok += 1;
        } else if witness.is_none() {
            witness = Some(json!({"sample": s, "check": "integral_power", "x": x, "exponent": e}));
        }
    }

    let n_s = cfg.samples;
    let ok = power_ok == n_s
        && routes_agree == n_s
        && trivial_ok == n_s
        && identity_ok
        && divisibility_ok == div_samples;
    let mut data = json!({
        "samples": n_s,
        "exponents": by_m,
        "power_recovers_input": power_ok,
        "independent_routes_agree": routes_agree,
        "first_root_is_input": trivial_ok,
        "identity_roots_trivial": identity_ok,
        "integral_power_samples": div_samples,
        "integral_power_ok": divisibility_ok,
    });
    if let Some(w) = witness {
        data["witness"] = w;
    }
    Ok((ok, data))
}

pub fn verify_roots(cfg: &RunConfig) -> CheckResult {
    let start = Instant::now();
    let params = json!({"n": cfg.n, "r": cfg.r, "seed": cfg.seed, "samples": cfg.samples});
    match roots_data(cfg) {
        Ok((ok, data)) => CheckResult::new("roots", params, status(ok), data, start),
        Err(e) => CheckResult::error("roots", params, &e, start),
    }
}

// ---------------------------------------------------------------------------
// Perfectness of sl_n over Z

/// Expected invariant factors of the bracket map `Λ^2 sl_n(Z) -> sl_n(Z)`.
pub fn expected_divisors(n: usize) -> Vec<BigInt> {
    let dim = n * n - 1;
    if n == 2 {
        vec![BigInt::from(1), BigInt::from(2), BigInt::from(2)]
    } else {
        vec![BigInt::one(); dim]
    }
}

pub fn verify_perfectness(n_min: usize, n_max: usize) -> CheckResult {
    let start = Instant::now();
    let params = json!({"n_min": n_min, "n_max": n_max});
    let mut rows = Vec::new();
    let mut ok = true;
    for n in n_min..=n_max {
        match commutator_divisors(n) {
            Ok(snf) => {
                let expected = expected_divisors(n);
                let this = snf.divisors == expected && snf.rank == n * n - 1;
                ok &= this;
                rows.push(json!({
                    "n": n,
                    "divisors": snf.divisors.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "index": snf.torsion_index().to_string(),
                    "perfect_over_z": snf.all_units(),
                    "matches_expected": this,
                }));
            }
            Err(e) => return CheckResult::error("perfectness", params, &e, start),
        }
    }
    CheckResult::new(
        "perfectness",
        params,
        status(ok),
        json!({ "results": rows }),
        start,
    )
}

// ---------------------------------------------------------------------------
// Lie structure of u_l

fn corrupt(u: &LieAlgebra) -> LieAlgebra {
    // Adds b_0 to [b_0, b_1] and b_1 to [b_1, b_2]. Antisymmetry survives,
    // the Jacobiator of (b_0, b_1, b_2) picks up b_0.
    u.with_perturbed_constant(0, 1, 0, BigRational::one())
        .with_perturbed_constant(1, 2, 1, BigRational::one())
}

fn algebra(cfg: &RunConfig, l: usize) -> Result<LieAlgebra> {
    let u = build_u(cfg.n, l)?;
    Ok(match cfg.fault {
        Some(Fault::StructureConstant) => corrupt(&u),
        None => u,
    })
}

pub fn verify_structure(cfg: &RunConfig) -> Vec<CheckResult> {
    (2..=cfg.l_max)
        .map(|l| {
            let start = Instant::now();
            let params = json!({"n": cfg.n, "l": l});
            let run = || -> Result<(bool, Value)> {
                let u = algebra(cfg, l)?;
                let anti = u.check_antisymmetry();
                let jacobi = u.check_jacobi();
                let d2 = d_squared_witness(&u, 1)?;
                let ok = anti.is_ok() && jacobi.is_ok() && d2.is_none();
                let mut data = json!({
                    "dim": u.dim(),
                    "antisymmetry": anti.is_ok(),
                    "jacobi": jacobi.is_ok(),
                    "d_squared_zero": d2.is_none(),
                });
                if let Err(v) = anti.and(jacobi) {
                    data["witness"] = serde_json::to_value(v).unwrap_or(Value::Null);
                } else if let Some(t) = d2 {
                    let labels: Vec<&str> = t.iter().map(|&i| u.labels()[i].as_str()).collect();
                    data["witness"] =
                        json!({"identity": "d_squared", "basis": t, "labels": labels});
                }
                Ok((ok, data))
            };
            match run() {
                Ok((ok, data)) => CheckResult::new("structure", params, status(ok), data, start),
                Err(e) => CheckResult::error("structure", params, &e, start),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Cohomology of u_l

/// Reports for `H^1` and `H^2` of `u_l`, or `None` when over budget.
fn cohomology_reports(cfg: &RunConfig, l: usize) -> Result<Option<(usize, Vec<CohomologyReport>)>> {
    let dim = (cfg.n * cfg.n - 1) * (l - 1);
    if binomial(dim, 3) > cfg.max_cochains {
        return Ok(None);
    }
    let u = algebra(cfg, l)?;
    Ok(Some((
        dim,
        vec![report_for(&u, l, 1)?, report_for(&u, l, 2)?],
    )))
}

pub fn verify_cohomology(cfg: &RunConfig) -> Vec<CheckResult> {
    let n = cfg.n;
    let adj = n * n - 1;
    let mut out = Vec::new();
    for l in 2..=cfg.l_max {
        let start = Instant::now();
        let params = json!({"n": n, "l": l});
        let reports = match cohomology_reports(cfg, l) {
            Ok(Some(r)) => r,
            Ok(None) => {
                let dim = adj * (l - 1);
                let data = json!({
                    "reason": "cochain budget exceeded",
                    "dim": dim,
                    "cochains_deg3": binomial(dim, 3),
                    "max_cochains": cfg.max_cochains,
                });
                for id in [
                    "cohomology.h1_adjoint",
                    "cohomology.h2_invariants",
                    "cohomology.betti_bound",
                ] {
                    out.push(CheckResult::new(
                        id,
                        params.clone(),
                        Status::Skipped,
                        data.clone(),
                        start,
                    ));
                }
                continue;
            }
            Err(e) => {
                out.push(CheckResult::error("cohomology", params, &e, start));
                continue;
            }
        };
        let (dim, reps) = reports;
        let (h1, h2) = (&reps[0], &reps[1]);

        // H^1 = u / [u, u] = sl_n ⊗ T, which is the adjoint representation.
        let h1_ok = h1.character == adjoint_character(n);
        out.push(CheckResult::new(
            "cohomology.h1_adjoint",
            params.clone(),
            status(h1_ok),
            json!({"dim": dim, "h1": h1}),
            start,
        ));

        let inv = if n >= 3 {
            status(h2.invariant_dim == 0)
        } else {
            Status::Skipped
        };
        let mut inv_data = json!({"dim": dim, "h2": h2});
        if n < 3 {
            inv_data["reason"] = json!("vanishing of invariants is only claimed for n >= 3");
        }
        out.push(CheckResult::new(
            "cohomology.h2_invariants",
            params.clone(),
            inv,
            inv_data,
            start,
        ));

        let (b1, b2) = (h1.betti, h2.betti);
        let bound = 4 * b2 >= b1 * b1 && 4 * b2 >= adj * adj;
        let bound_status = if n >= 3 {
            status(bound)
        } else {
            Status::Skipped
        };
        out.push(CheckResult::new(
            "cohomology.betti_bound",
            params,
            bound_status,
            json!({"b1": b1, "b2": b2, "four_b2_ge_b1_sq": 4 * b2 >= b1 * b1,
                   "four_b2_ge_adj_sq": 4 * b2 >= adj * adj}),
            start,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Decompositions of tensor and exterior powers of the adjoint module

/// Published decompositions, keyed by `(label, expected dimension)`.
pub fn expected_decompositions(n: usize) -> Option<Vec<(&'static str, u64, Decomposition)>> {
    let d = |pairs: &[(&[u32], u64)]| {
        Decomposition::from_pairs(pairs.iter().map(|(a, m)| (a.to_vec(), *m)))
    };
    match n {
        3 => Some(vec![
            (
                "adj^2",
                64,
                d(&[
                    (&[2, 2], 1),
                    (&[3, 0], 1),
                    (&[0, 3], 1),
                    (&[1, 1], 2),
                    (&[0, 0], 1),
                ]),
            ),
            ("wedge2", 28, d(&[(&[3, 0], 1), (&[0, 3], 1), (&[1, 1], 1)])),
            (
                "wedge3",
                56,
                d(&[
                    (&[2, 2], 1),
                    (&[3, 0], 1),
                    (&[0, 3], 1),
                    (&[1, 1], 1),
                    (&[0, 0], 1),
                ]),
            ),
        ]),
        4 => Some(vec![
            (
                "adj^2",
                225,
                d(&[
                    (&[2, 0, 2], 1),
                    (&[2, 1, 0], 1),
                    (&[0, 1, 2], 1),
                    (&[0, 2, 0], 1),
                    (&[1, 0, 1], 2),
                    (&[0, 0, 0], 1),
                ]),
            ),
            (
                "wedge2",
                105,
                d(&[(&[2, 1, 0], 1), (&[0, 1, 2], 1), (&[1, 0, 1], 1)]),
            ),
            (
                "wedge3",
                455,
                d(&[
                    (&[4, 0, 0], 1),
                    (&[0, 0, 4], 1),
                    (&[1, 2, 1], 1),
                    (&[2, 0, 2], 1),
                    (&[2, 1, 0], 1),
                    (&[0, 1, 2], 1),
                    (&[0, 2, 0], 1),
                    (&[1, 0, 1], 1),
                    (&[0, 0, 0], 1),
                ]),
            ),
        ]),
        _ => None,
    }
}

pub fn verify_lemma_reps(n: usize) -> std::result::Result<CheckResult, ConfigError> {
    let expected = expected_decompositions(n)
        .ok_or_else(|| ConfigError(format!("lemma-reps is defined for n = 3 or 4, got {n}")))?;
    let start = Instant::now();
    let params = json!({"n": n});
    let run = || -> Result<(bool, Value)> {
        let adj = adjoint_character(n);
        let computed = [
            ("adj^2", tensor_character(&adj, &adj)?),
            ("wedge2", wedge_character(&adj, 2)?),
            ("wedge3", wedge_character(&adj, 3)?),
        ];
        let mut ok = true;
        let mut parts = Vec::new();
        for ((label, dim, want), (label2, chr)) in expected.iter().zip(computed.iter()) {
            debug_assert_eq!(label, label2);
            let got = decompose(chr)?;
            let this = got == *want && got.dimension() == *dim && chr.mass() == *dim;
            ok &= this;
            parts.push(json!({
                "module": label,
                "computed": got.to_string(),
                "expected": want.to_string(),
                "dimension": got.dimension(),
                "expected_dimension": dim,
                "match": this,
            }));
        }
        Ok((ok, json!({ "parts": parts })))
    };
    Ok(match run() {
        Ok((ok, data)) => CheckResult::new("lemma_reps", params, status(ok), data, start),
        Err(e) => CheckResult::error("lemma_reps", params, &e, start),
    })
}

// ---------------------------------------------------------------------------
// Full report

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(config: RunConfig, results: Vec<CheckResult>) -> Self {
        let count = |s: Status| results.iter().filter(|r| r.status == s).count();
        let summary = Summary {
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            skipped: count(Status::Skipped),
        };
        RunReport {
            config,
            results,
            summary,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// Pretty JSON; timings are dropped unless `timings` is set.
    pub fn to_json(&self, timings: bool) -> String {
        let mut copy = self.clone();
        if !timings {
            for r in &mut copy.results {
                r.elapsed_ms = None;
            }
        }
        serde_json::to_string_pretty(&copy).expect("report serializes") + "\n"
    }

    pub fn to_markdown(&self, timings: bool) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "# Verification report\n");
        let _ = writeln!(
            s,
            "n = {}, l_max = {}, r = {}, seed = {}, samples = {}\n",
            c.n, c.l_max, c.r, c.seed, c.samples
        );
        let _ = writeln!(
            s,
            "| check | params | status |{}",
            if timings { " ms |" } else { "" }
        );
        let _ = writeln!(s, "|---|---|---|{}", if timings { "---|" } else { "" });
        for r in &self.results {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let st = match r.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skipped",
            };
            let _ = write!(s, "| {} | {} | {} |", r.check_id, params.join(", "), st);
            if timings {
                let _ = write!(s, " {} |", r.elapsed_ms.unwrap_or(0));
            }
            s.push('\n');
        }
        let m = &self.summary;
        let _ = writeln!(
            s,
            "\n{} passed, {} failed, {} skipped",
            m.passed, m.failed, m.skipped
        );
        s
    }
}

/// Every suite with the given configuration. `lemma_reps` runs when `n` is 3 or 4.
pub fn report_all(cfg: &RunConfig) -> RunReport {
    let mut results = vec![
        verify_filtration(cfg),
        verify_roots(cfg),
        verify_perfectness(2, cfg.n.max(5)),
    ];
    results.extend(verify_structure(cfg));
    results.extend(verify_cohomology(cfg));
    if let Ok(r) = verify_lemma_reps(cfg.n) {
        results.push(r);
    }
    RunReport::new(cfg.clone(), results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig {
            n: 3,
            l_max: 3,
            r: 4,
            seed: 7,
            samples: 20,
            ..RunConfig::default()
        }
    }

    #[test]
    fn validation_rejects_degenerate_parameters() {
        assert!(small().validate().is_ok());
        assert!(RunConfig { r: 1, ..small() }.validate().is_err());
        assert!(RunConfig { n: 1, ..small() }.validate().is_err());
        assert!(RunConfig {
            l_max: 1,
            ..small()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            samples: 0,
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn filtration_and_roots_pass() {
        assert_eq!(verify_filtration(&small()).status, Status::Pass);
        let two = RunConfig {
            n: 2,
            r: 3,
            ..small()
        };
        assert_eq!(verify_filtration(&two).status, Status::Pass);
        assert_eq!(
            verify_roots(&RunConfig { r: 5, ..small() }).status,
            Status::Pass
        );
    }

    #[test]
    fn perfectness_table() {
        let r = verify_perfectness(2, 4);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.data["results"][0]["index"], "4");
        assert_eq!(r.data["results"][1]["perfect_over_z"], true);
    }

    #[test]
    fn lemma_reps_only_for_three_and_four() {
        assert_eq!(verify_lemma_reps(3).unwrap().status, Status::Pass);
        assert!(verify_lemma_reps(5).is_err());
        assert!(verify_lemma_reps(2).is_err());
    }

    #[test]
    fn fault_injection_is_detected() {
        for n in [2, 3] {
            let cfg = RunConfig {
                n,
                l_max: 3,
                fault: Some(Fault::StructureConstant),
                ..small()
            };
            for res in verify_structure(&cfg) {
                assert_eq!(res.status, Status::Fail);
                assert!(res.data.get("witness").is_some());
            }
        }
        let clean = verify_structure(&RunConfig {
            l_max: 2,
            ..small()
        });
        assert_eq!(clean[0].status, Status::Pass);
    }

    #[test]
    fn cohomology_checks_and_budget() {
        let res = verify_cohomology(&RunConfig {
            l_max: 2,
            ..small()
        });
        assert!(res.iter().all(|r| r.status == Status::Pass), "{res:#?}");
        let tight = verify_cohomology(&RunConfig {
            l_max: 2,
            max_cochains: 10,
            ..small()
        });
        assert!(tight.iter().all(|r| r.status == Status::Skipped));
        let two = verify_cohomology(&RunConfig {
            n: 2,
            l_max: 3,
            ..small()
        });
        assert!(two.iter().all(|r| r.passed()));
    }

    #[test]
    fn report_is_reproducible_across_thread_counts() {
        let cfg = RunConfig {
            l_max: 2,
            samples: 10,
            ..small()
        };
        let a = with_threads(1, || report_all(&cfg)).unwrap().to_json(false);
        let b = with_threads(2, || report_all(&cfg)).unwrap().to_json(false);
        assert_eq!(a, b);
        assert!(!a.contains("elapsed_ms"));
    }
}
