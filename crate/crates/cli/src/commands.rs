use std::fmt::{self, Write as _};
use std::fs;

use matchpert::oracle::{aligned_grid_size, fd_eigenvalues, rs_first_order, shooting_eigenvalue, GridHamiltonian};
use matchpert::perturbation::OrderDiagnostics;
use matchpert::zero_order::{domain_bases, psi0_pieces};
use matchpert::{
    find_eigenvalues, match_coefficients, parse_spec, run_series, secular_determinant, Error, PerturbationSpec,
    PotentialSpec, TrigPoly, ZeroOrderOptions,
};
use serde_json::{json, Value};

use crate::json::{num, nums};
use crate::{Format, RunArgs};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        if err.is_input_error() {
            CliError::Input(err.to_string())
        } else {
            CliError::Numerical(err.to_string())
        }
    }
}

pub struct Outcome {
    pub code: u8,
    pub note: Option<String>,
}

impl Outcome {
    fn ok() -> Self {
        Self { code: 0, note: None }
    }
}

type Loaded = (PotentialSpec<f64>, Option<PerturbationSpec<f64>>);

fn load(args: &RunArgs) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.spec.display())))?;
    Ok(parse_spec(&text)?)
}

fn options(args: &RunArgs) -> Result<ZeroOrderOptions<f64>, CliError> {
    let mut opts = ZeroOrderOptions::default();
    if let Some(b) = args.beta_min {
        if !(b > 0.0 && b.is_finite()) {
            return Err(CliError::Input(format!("--beta-min must be positive, got {b}")));
        }
        opts.tol.beta_min = b;
    }
    if let Some(c) = args.condition_max {
        if !(c > 1.0) {
            return Err(CliError::Input(format!("--condition-max must exceed 1, got {c}")));
        }
        opts.tol.condition_max = c;
    }
    Ok(opts)
}

fn max_height(spec: &PotentialSpec<f64>) -> f64 {
    spec.heights().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Energy window from either flag pair, defaulting to [min H, max H + 50].
fn energy_window(args: &RunArgs, spec: &PotentialSpec<f64>) -> Result<(f64, f64), CliError> {
    let floor = spec.min_height();
    let (lo, hi) = match (args.k_lo, args.k_hi, args.e_lo, args.e_hi) {
        (Some(a), Some(b), _, _) => {
            if a < 0.0 {
                return Err(CliError::Input(format!("--k-lo must be non-negative, got {a}")));
            }
            (floor + a * a, floor + b * b)
        }
        (_, _, Some(a), Some(b)) => (a, b),
        _ => (floor, max_height(spec) + 50.0),
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::Input(format!("empty window [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

fn momentum_window(args: &RunArgs, spec: &PotentialSpec<f64>) -> Result<(f64, f64), CliError> {
    if let (Some(a), Some(b)) = (args.k_lo, args.k_hi) {
        if a < 0.0 || !(a < b) {
            return Err(CliError::Input(format!("momentum window [{a}, {b}] must satisfy 0 ≤ k_lo < k_hi")));
        }
        return Ok((a, b));
    }
    let (lo, hi) = energy_window(args, spec)?;
    let floor = spec.min_height();
    Ok(((lo - floor).max(0.0).sqrt(), (hi - floor).sqrt()))
}

fn emit(args: &RunArgs, text: &str) -> Result<(), CliError> {
    match &args.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn scan(args: &RunArgs) -> Result<Outcome, CliError> {
    if args.points < 2 {
        return Err(CliError::Input(format!("--points must be at least 2, got {}", args.points)));
    }
    let (spec, _) = load(args)?;
    let opts = options(args)?;
    let (k_lo, k_hi) = momentum_window(args, &spec)?;
    let floor = spec.min_height();
    let mut rows = Vec::with_capacity(args.points);
    for i in 0..args.points {
        let k = k_lo + (k_hi - k_lo) * i as f64 / (args.points - 1) as f64;
        let energy = floor + k * k;
        match secular_determinant(&spec, energy, &opts) {
            Ok(d) => rows.push((k, energy, Ok(d))),
            Err(e @ Error::DegenerateEnergy { .. }) => rows.push((k, energy, Err(e.to_string()))),
            Err(e) => return Err(e.into()),
        }
    }
    let text = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::new();
            writeln!(out, "# matchpert scan").unwrap();
            writeln!(out, "# k = sqrt(E - min H), min H = {}", fmt(floor)).unwrap();
            writeln!(out, "k,determinant").unwrap();
            for (k, _, d) in &rows {
                match d {
                    Ok(d) => writeln!(out, "{},{}", fmt(*k), fmt(*d)).unwrap(),
                    Err(reason) => writeln!(out, "# skipped k = {}: {reason}", fmt(*k)).unwrap(),
                }
            }
            out
        }
        Format::Json => {
            let points: Vec<Value> = rows
                .iter()
                .filter_map(|(k, e, d)| d.as_ref().ok().map(|d| json!({ "k": num(*k), "energy": num(*e), "determinant": num(*d) })))
                .collect();
            let skipped: Vec<Value> = rows
                .iter()
                .filter_map(|(k, e, d)| d.as_ref().err().map(|r| json!({ "k": num(*k), "energy": num(*e), "reason": r })))
                .collect();
            crate::json::to_string(&json!({
                "format_version": FORMAT_VERSION,
                "command": "scan",
                "min_height": num(floor),
                "points": points,
                "skipped": skipped,
            }))
        }
    };
    emit(args, &text)?;
    Ok(Outcome::ok())
}

pub fn spectrum(args: &RunArgs) -> Result<Outcome, CliError> {
    let (spec, _) = load(args)?;
    let opts = options(args)?;
    let (e_lo, e_hi) = energy_window(args, &spec)?;
    let scan = find_eigenvalues(&spec, e_lo, e_hi, args.count.max(1), &opts)?;
    let floor = spec.min_height();
    let mut levels = Vec::with_capacity(scan.roots.len());
    for (index, &energy) in scan.roots.iter().enumerate() {
        let state = match_coefficients(&spec, energy, &opts)?;
        let coefficients: Vec<Value> = state
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &(c, d))| json!({ "domain": j + 1, "c": num(c), "d": num(d) }))
            .collect();
        levels.push((index, energy, state.residual, state.l2_norm, coefficients));
    }
    let warning = scan.roots.is_empty().then(|| format!("no eigenvalues in [{e_lo}, {e_hi}]"));
    let text = match args.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut out = String::new();
            writeln!(out, "# matchpert spectrum in [{}, {}]", fmt(e_lo), fmt(e_hi)).unwrap();
            writeln!(out, "index,energy,k,residual").unwrap();
            for (index, energy, residual, _, _) in &levels {
                writeln!(out, "{index},{},{},{}", fmt(*energy), fmt((energy - floor).sqrt()), fmt(*residual)).unwrap();
            }
            out
        }
        Format::Json => {
            let eigenvalues: Vec<Value> = levels
                .into_iter()
                .map(|(index, energy, residual, norm, coefficients)| {
                    json!({
                        "index": index,
                        "energy": num(energy),
                        "k": num((energy - floor).sqrt()),
                        "residual": num(residual),
                        "l2_norm": num(norm),
                        "coefficients": coefficients,
                    })
                })
                .collect();
            let splittings = nums(scan.roots.windows(2).map(|w| w[1] - w[0]));
            let skipped: Vec<Value> = scan
                .skipped
                .iter()
                .map(|s| json!({ "energy": num(s.energy), "reason": s.reason }))
                .collect();
            crate::json::to_string(&json!({
                "format_version": FORMAT_VERSION,
                "command": "spectrum",
                "window": { "e_lo": num(e_lo), "e_hi": num(e_hi) },
                "complete": scan.complete,
                "eigenvalues": eigenvalues,
                "splittings": splittings,
                "skipped": skipped,
                "warnings": warning.iter().collect::<Vec<_>>(),
            }))
        }
    };
    emit(args, &text)?;
    Ok(Outcome { code: 0, note: warning.map(|w| format!("warning: {w}")) })
}

fn require_json(args: &RunArgs, command: &str) -> Result<(), CliError> {
    if args.format == Some(Format::Csv) {
        return Err(CliError::Input(format!("`{command}` writes JSON only")));
    }
    Ok(())
}

fn require_perturbation(pert: Option<PerturbationSpec<f64>>) -> Result<PerturbationSpec<f64>, CliError> {
    pert.ok_or_else(|| CliError::Input("the input document has no `perturbation` section".into()))
}

fn sample_grid(spec: &PotentialSpec<f64>, samples: usize) -> Vec<f64> {
    let (a, b) = (spec.left_wall(), spec.right_wall());
    let n = samples.max(2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn sample(spec: &PotentialSpec<f64>, pieces: &[TrigPoly<f64>], grid: &[f64]) -> Value {
    nums(grid.iter().map(|&x| pieces[spec.interval_of(x).min(pieces.len() - 1)].eval_complex(x).re))
}

pub fn perturb(args: &RunArgs) -> Result<Outcome, CliError> {
    require_json(args, "perturb")?;
    let (spec, pert) = load(args)?;
    let pert = require_perturbation(pert)?;
    let opts = options(args)?;
    let window = energy_window(args, &spec)?;
    let report = run_series(&spec, &pert, window, args.level, args.orders, &opts)?;
    let state = &report.history.state;
    let grid = sample_grid(&spec, args.samples);
    let psi0 = psi0_pieces(state)?;
    let warnings = precision_warnings(&report.diagnostics);
    let orders: Vec<Value> = report
        .history
        .orders
        .iter()
        .zip(&report.diagnostics)
        .map(|(o, d)| {
            json!({
                "order": o.order,
                "energy": num(o.energy),
                "x": nums(o.x.iter().copied()),
                "z": nums(o.z.iter().copied()),
                "xi": nums(o.xi.iter().copied()),
                "condition": num(o.condition),
                "diagnostics": {
                    "equation_residual": num(d.equation_residual),
                    "wall_residual": num(d.wall_residual),
                    "continuity": num(d.continuity),
                    "overlap": num(d.overlap),
                    "projection_on_psi0": num(d.projection),
                },
                "psi": sample(&spec, &o.global, &grid),
            })
        })
        .collect();
    let text = crate::json::to_string(&json!({
        "format_version": FORMAT_VERSION,
        "command": "perturb",
        "level": args.level,
        "coupling": num(pert.coupling()),
        "energies": nums(report.energies.iter().copied()),
        "partial_sum": num(report.partial_sum(pert.coupling())),
        "grid": nums(grid.iter().copied()),
        "zero_order": {
            "energy": num(state.energy),
            "residual": num(state.residual),
            "coefficients": state.coeffs.iter().enumerate()
                .map(|(j, &(c, d))| json!({ "domain": j + 1, "c": num(c), "d": num(d) }))
                .collect::<Vec<_>>(),
            "psi": sample(&spec, &psi0, &grid),
        },
        "orders": orders,
        "warnings": warnings,
    }));
    emit(args, &text)?;
    let note = (!warnings.is_empty()).then(|| warnings.iter().map(|w| format!("warning: {w}")).collect::<Vec<_>>().join("\n"));
    Ok(Outcome { code: 0, note })
}

const RESIDUAL_MAX: f64 = 1e-9;
const OVERLAP_MAX: f64 = 1e-8;

/// Orders whose diagnostics show lost precision, typically from E⁽⁰⁾ sitting
/// close to an interval height (small |β|).
fn precision_warnings(diagnostics: &[OrderDiagnostics<f64>]) -> Vec<String> {
    diagnostics
        .iter()
        .filter(|d| {
            !(d.equation_residual < RESIDUAL_MAX && d.continuity.max(d.wall_residual) < RESIDUAL_MAX && d.overlap < OVERLAP_MAX)
        })
        .map(|d| {
            format!(
                "order {} lost precision (equation residual {:e}, continuity {:e}, overlap {:e}); E(0) may be too close to an interval height",
                d.order,
                d.equation_residual,
                d.continuity.max(d.wall_residual),
                d.overlap
            )
        })
        .collect()
}

struct Check {
    name: &'static str,
    passed: bool,
    value: f64,
    threshold: f64,
    detail: String,
}

impl Check {
    fn below(name: &'static str, value: f64, threshold: f64, detail: String) -> Self {
        Self { name, passed: value < threshold, value, threshold, detail }
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.passed,
            "value": num(self.value),
            "threshold": num(self.threshold),
            "detail": self.detail,
        })
    }
}

const SWEEP: [f64; 3] = [1e-2, 3e-3, 1e-3];
const MIN_SLOPE: f64 = 2.7;

fn zero_order_checks(spec: &PotentialSpec<f64>, roots: &[f64], opts: &ZeroOrderOptions<f64>) -> Result<Vec<Check>, CliError> {
    let tol = &opts.tol;
    let mut checks = Vec::new();

    let grid_size = aligned_grid_size(spec, 4000);
    let top = roots.last().copied().unwrap_or(spec.min_height());
    let needed = GridHamiltonian::new(spec, None, 0.0, grid_size).count_below(top + 1.0) + 1;
    let fd = fd_eigenvalues(spec, None, 0.0, grid_size, needed)?;
    let refined = fd_eigenvalues(spec, None, 0.0, 2 * grid_size + 1, needed)?;
    // The Richardson estimate alone undershoots when the h² coefficient nearly
    // cancels (jumps in V); the bound adds the drift between two extrapolations.
    let mut ratio = 0.0f64;
    let mut worst_bound = 0.0f64;
    for &e in roots {
        let nearest = (0..fd.levels.len().min(refined.levels.len()))
            .min_by(|&i, &j| (fd.levels[i].extrapolated - e).abs().total_cmp(&(fd.levels[j].extrapolated - e).abs()));
        match nearest {
            Some(i) => {
                let (l, r) = (&fd.levels[i], &refined.levels[i]);
                let bound = (l.coarse - l.fine).abs() + (l.extrapolated - r.extrapolated).abs();
                ratio = ratio.max((l.extrapolated - e).abs() / bound.max(f64::MIN_POSITIVE));
                worst_bound = worst_bound.max(bound);
            }
            None => ratio = f64::INFINITY,
        }
    }
    checks.push(Check {
        name: "finite_difference_agreement",
        passed: ratio <= 1.0,
        value: ratio,
        threshold: 1.0,
        detail: format!(
            "|E − E_fd| / (|E_M − E_2M| + |Ê_M − Ê_2M|) over {} levels, M = {grid_size}, largest bound {worst_bound:e}",
            roots.len()
        ),
    });

    let mut shooting = 0.0f64;
    for &e in roots {
        let s = shooting_eigenvalue(spec, None, 0.0, e, 1e-6 * e.abs().max(1.0))?;
        shooting = shooting.max((s - e).abs() / e.abs().max(1.0));
    }
    checks.push(Check::below("shooting_agreement", shooting, 1e-9, "relative |E − E_shoot|".into()));

    let mut wronskian = 0.0f64;
    let mut smooth = 0.0f64;
    for &e in roots {
        for basis in domain_bases(spec, e, opts)? {
            let d = basis.domain;
            for i in 0..20 {
                let x = d.left_end + (d.right_end - d.left_end) * i as f64 / 19.0;
                wronskian = wronskian.max((basis.wronskian(x, tol)? - 1.0).abs());
            }
        }
        smooth = smooth.max(match_coefficients(spec, e, opts)?.overlap_mismatch(tol)?);
    }
    checks.push(Check::below("wronskian", wronskian, 1e-10, "max |C S′ − C′ S − 1| at 20 points per domain".into()));
    checks.push(Check::below("psi0_continuity", smooth, 1e-9, "value and slope agreement of adjacent domains".into()));
    Ok(checks)
}

fn series_checks(
    spec: &PotentialSpec<f64>,
    pert: &PerturbationSpec<f64>,
    window: (f64, f64),
    args: &RunArgs,
    opts: &ZeroOrderOptions<f64>,
) -> Result<Vec<Check>, CliError> {
    let orders = args.orders.max(1);
    let report = run_series(spec, pert, window, args.level, orders, opts)?;
    let mut checks = Vec::new();
    let worst = |f: fn(&OrderDiagnostics<f64>) -> f64| {
        report.diagnostics.iter().map(f).fold(0.0, f64::max)
    };
    checks.push(Check::below(
        "equation_residual",
        worst(|d| d.equation_residual),
        RESIDUAL_MAX,
        format!("orders 1..={orders}"),
    ));
    checks.push(Check::below(
        "correction_continuity",
        worst(|d| d.continuity.max(d.wall_residual)),
        RESIDUAL_MAX,
        "jumps at breakpoints and values at the walls".into(),
    ));
    checks.push(Check::below("overlap_agreement", worst(|d| d.overlap), OVERLAP_MAX, "adjacent domain representations".into()));

    let reference = rs_first_order(&report.history.state, pert)?;
    let scale = reference.abs().max(
        (0..spec.interval_count())
            .flat_map(|i| [pert.value_on(i, spec.breakpoints()[i]), pert.value_on(i, spec.breakpoints()[i + 1])])
            .fold(0.0f64, |m, v| m.max(v.abs())),
    );
    let e1 = report.energies[1];
    checks.push(Check::below(
        "first_order_integral",
        (e1 - reference).abs() / scale.max(f64::MIN_POSITIVE),
        1e-8,
        format!("E1 = {e1:e}, ⟨ψ0|V1|ψ0⟩/⟨ψ0|ψ0⟩ = {reference:e}"),
    ));

    if orders >= 2 {
        let unit = pert.clone().with_coupling(1.0);
        let truncated = |lambda: f64| report.energies.iter().take(3).rev().fold(0.0, |acc, &e| acc * lambda + e);
        let mut points = Vec::new();
        for lambda in SWEEP {
            let sum = truncated(lambda);
            let exact = shooting_eigenvalue(spec, Some(&unit), lambda, sum, 1e-3 * sum.abs().max(1.0))?;
            points.push((lambda, (exact - sum).abs()));
        }
        let floor = 1e-11 * report.energies[0].abs().max(1.0);
        let largest = points.iter().map(|p| p.1).fold(0.0, f64::max);
        let remainders = points.iter().map(|p| format!("{:.3e}", p.1)).collect::<Vec<_>>().join(", ");
        if largest <= floor {
            checks.push(Check {
                name: "series_consistency",
                passed: true,
                value: largest,
                threshold: floor,
                detail: format!("second-order sum exact to roundoff (remainders {remainders})"),
            });
        } else {
            let logs: Vec<(f64, f64)> = points.iter().map(|&(l, r)| (l.ln(), r.max(f64::MIN_POSITIVE).ln())).collect();
            let n = logs.len() as f64;
            let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
            let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
            let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            checks.push(Check {
                name: "series_consistency",
                passed: slope >= MIN_SLOPE,
                value: slope,
                threshold: MIN_SLOPE,
                detail: format!("log-log slope of |E(λ) − Σ_{{k≤2}} λᵏ E⁽ᵏ⁾| over λ = 1e-2, 3e-3, 1e-3 (remainders {remainders})"),
            });
        }
    }
    Ok(checks)
}

pub fn validate(args: &RunArgs) -> Result<Outcome, CliError> {
    require_json(args, "validate")?;
    let (spec, pert) = load(args)?;
    let opts = options(args)?;
    let window = energy_window(args, &spec)?;
    let scan = find_eigenvalues(&spec, window.0, window.1, args.count.max(1), &opts)?;
    let mut checks = vec![Check {
        name: "eigenvalues_found",
        passed: !scan.roots.is_empty(),
        value: scan.roots.len() as f64,
        threshold: 1.0,
        detail: format!("in [{}, {}]", window.0, window.1),
    }];
    checks.extend(zero_order_checks(&spec, &scan.roots, &opts)?);
    if let Some(pert) = &pert {
        if !spec.has_polynomial_zero_order() && !scan.roots.is_empty() {
            checks.extend(series_checks(&spec, pert, window, args, &opts)?);
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let text = crate::json::to_string(&json!({
        "format_version": FORMAT_VERSION,
        "command": "validate",
        "passed": passed,
        "eigenvalues": nums(scan.roots.iter().copied()),
        "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
    }));
    emit(args, &text)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    Ok(if passed {
        Outcome::ok()
    } else {
        Outcome { code: 1, note: Some(format!("validation failed: {}", failed.join(", "))) }
    })
}
