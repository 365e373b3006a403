//! Batch front end: validation, metric calculus, operator checks, order
//! diagnostics, and scenario demos, all emitting deterministic JSON (or
//! CSV) reports.
//!
//! Inputs are catalog references ("z_interval:10", "df:id:10") or paths to
//! JSON files; a string naming an existing file is loaded, anything else
//! is resolved against the catalog. Exit codes: 0 every check passed, 1 a
//! check failed (the report is still written), 2 malformed input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use roe_calculus::almost_isometry::{
    extract_close_map, near_identity_check, sandwich_check, ExtractOutcome, PartialMap,
};
use roe_calculus::catalog;
use roe_calculus::family::MetricFamily;
use roe_calculus::glue::{identity_glue, GlueMetric};
use roe_calculus::io;
use roe_calculus::operator::{
    band_decompose, factor_through, Band, FinitePropagationOperator,
};
use roe_calculus::order::{
    close_pair_matching, default_radii, domination_profile, equivalence_check, idempotent_check,
    inv_semi_check, order_check, selfadjoint_check, upper_bound_feasibility, OrderRelation,
    UpperBoundOutcome, DEFAULT_GROWTH_THRESHOLD,
};
use roe_calculus::space::FiniteMetricSpace;
use roe_calculus::ValidationReport;

#[derive(Debug, Parser)]
#[command(name = "roe-calc", version, about = "metric calculus on disjoint unions")]
struct Cli {
    /// Write the report here instead of stdout; a `<output>.meta.json`
    /// sidecar records the invocation and timestamp so reports stay
    /// byte-identical across runs.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report format; csv is available for profile-like tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Default seed appended to catalog references that omit one.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct RadiiArgs {
    /// Comma-separated probe radii; defaults to 1,2,4,8,16 clipped to the
    /// data.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a space, glue, map, or operator file/reference.
    Validate {
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        glue: Option<String>,
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        operator: Option<String>,
    },
    /// Min-plus composition of two glues sharing the middle space.
    Compose {
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
    },
    /// The identity glue d0 on two copies of a space.
    Dzero {
        #[arg(long)]
        space: String,
    },
    /// Transpose a glue (swap the two sides).
    Adjoint {
        #[arg(long)]
        g: String,
    },
    /// Pointwise maximum of two glues on the same spaces.
    Meet {
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
    },
    /// The glue metric induced by a partial almost isometry.
    FromMap {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
    /// Almost-isometry defect of a map with its witness pair.
    Defect {
        #[arg(long)]
        map: String,
    },
    /// Extract the nearest-point map within a bound from a glue.
    ExtractMap {
        #[arg(long)]
        g: String,
        #[arg(long)]
        bound: f64,
    },
    /// Compare a self-glue against d0 through its diagonal bound.
    NearIdentity {
        #[arg(long)]
        g: String,
    },
    /// Split an operator into width-1 bands.
    BandDecompose {
        #[arg(long)]
        operator: String,
        /// Optional glue for the per-band propagation column.
        #[arg(long)]
        g: Option<String>,
    },
    /// Factor a width-1 band through the middle space of two glues.
    Factor {
        #[arg(long)]
        operator: String,
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
    },
    /// Propagation of an operator against a glue.
    Propagation {
        #[arg(long)]
        operator: String,
        #[arg(long)]
        g: String,
    },
    /// Operator norm (largest singular value).
    Norm {
        #[arg(long)]
        operator: String,
    },
    /// Domination profile h(R) between two glues.
    Profile {
        #[arg(long)]
        g: String,
        #[arg(long = "g-prime")]
        g_prime: String,
        #[command(flatten)]
        radii: RadiiArgs,
    },
    /// Order verdict for family-g dominated by family-h.
    OrderCheck {
        #[arg(long = "family-g")]
        family_g: String,
        #[arg(long = "family-h")]
        family_h: String,
        #[command(flatten)]
        radii: RadiiArgs,
        #[arg(long, default_value_t = DEFAULT_GROWTH_THRESHOLD)]
        growth_threshold: f64,
    },
    /// Order verdicts both ways plus the equivalence verdict.
    EquivCheck {
        #[arg(long = "family-g")]
        family_g: String,
        #[arg(long = "family-h")]
        family_h: String,
        #[command(flatten)]
        radii: RadiiArgs,
        #[arg(long, default_value_t = DEFAULT_GROWTH_THRESHOLD)]
        growth_threshold: f64,
    },
    /// Verify g <= g∘g*∘g <= 3g entrywise.
    InvSemi {
        #[arg(long)]
        g: String,
    },
    /// Uniform bound on |g∘g - g| across a family.
    Idempotent {
        #[arg(long)]
        family: String,
    },
    /// Uniform bound on |g* - g| across a family.
    Selfadjoint {
        #[arg(long)]
        family: String,
    },
    /// Search for a common upper bound at the given closeness bound.
    JoinFeasible {
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
        #[arg(long)]
        bound: f64,
    },
    /// Maximum matching on the pairs a glue keeps within a bound.
    ClosePairs {
        #[arg(long)]
        g: String,
        #[arg(long)]
        bound: f64,
    },
    /// Run a named scenario end to end and check its expected pattern.
    Demo {
        /// One of: idem, nonupper, sparse-line.
        scenario: String,
        #[arg(long = "max-n", default_value_t = 20)]
        max_n: usize,
    },
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

/// Round to 12 significant digits so reports are diff-stable.
fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if !n.is_i64() && !n.is_u64() {
                    if let Some(r) = serde_json::Number::from_f64(round12(f)) {
                        *v = Value::Number(r);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn to_report<T: serde::Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_value(&mut v);
    v
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

type CliResult = Result<(Value, u8), Failure>;

// ---------------------------------------------------------------------------
// Input resolution: existing files load, everything else is a reference.
// ---------------------------------------------------------------------------

fn retry_with_seed<T>(
    input: &str,
    seed: u64,
    resolve: impl Fn(&str) -> roe_calculus::Result<T>,
) -> roe_calculus::Result<T> {
    resolve(input).or_else(|first| resolve(&format!("{input}:{seed}")).map_err(|_| first))
}

fn resolve_space_input(input: &str, seed: u64) -> Result<Arc<FiniteMetricSpace>, Failure> {
    if Path::new(input).is_file() {
        let (space, report) = io::load_space(input).map_err(input_error)?;
        if !report.ok {
            return Err(input_error(format!(
                "space {input:?} fails validation ({} violations)",
                report.violation_count
            )));
        }
        return Ok(space);
    }
    retry_with_seed(input, seed, catalog::resolve_space).map_err(input_error)
}

fn resolve_glue_input(input: &str, seed: u64) -> Result<GlueMetric, Failure> {
    if Path::new(input).is_file() {
        let (glue, report) = io::load_glue(input).map_err(input_error)?;
        if !report.ok {
            return Err(input_error(format!(
                "glue {input:?} fails validation ({} violations)",
                report.violation_count
            )));
        }
        return Ok(glue);
    }
    retry_with_seed(input, seed, catalog::resolve_glue).map_err(input_error)
}

fn resolve_map_input(input: &str, seed: u64) -> Result<PartialMap, Failure> {
    if Path::new(input).is_file() {
        let (map, report) = io::load_map(input).map_err(input_error)?;
        if !report.ok {
            return Err(input_error(format!("map {input:?} has invalid spaces")));
        }
        return Ok(map);
    }
    retry_with_seed(input, seed, catalog::resolve_map).map_err(input_error)
}

fn resolve_operator_input(input: &str) -> Result<FinitePropagationOperator, Failure> {
    if Path::new(input).is_file() {
        let (op, report) = io::load_operator(input).map_err(input_error)?;
        if !report.ok {
            return Err(input_error(format!("operator {input:?} has invalid spaces")));
        }
        return Ok(op);
    }
    Err(input_error(format!(
        "operator input {input:?} is not a file (operators have no catalog references)"
    )))
}

fn resolve_family_input(input: &str, seed: u64) -> Result<MetricFamily, Failure> {
    retry_with_seed(input, seed, catalog::resolve_family).map_err(input_error)
}

fn radii_or_default(args: &RadiiArgs, family: Option<&MetricFamily>) -> Result<Vec<f64>, Failure> {
    if !args.radii.is_empty() {
        return Ok(args.radii.clone());
    }
    match family {
        Some(f) => default_radii(f).map_err(input_error),
        None => Ok(vec![1.0, 2.0, 4.0, 8.0, 16.0]),
    }
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> CliResult {
    let seed = cli.seed;
    match &cli.command {
        Command::Validate {
            space,
            glue,
            map,
            operator,
        } => {
            let chosen = [space, glue, map, operator]
                .iter()
                .filter(|o| o.is_some())
                .count();
            if chosen != 1 {
                return Err(input_error(
                    "validate needs exactly one of --space/--glue/--map/--operator",
                ));
            }
            let report = validate_input(space, glue, map, operator, seed)?;
            let code = if report.ok { 0 } else { 2 };
            Ok((to_report(&report), code))
        }

        Command::Compose { g1, g2 } => {
            let a = resolve_glue_input(g1, seed)?;
            let b = resolve_glue_input(g2, seed)?;
            let composed = a.compose(&b).map_err(input_error)?;
            let ok = composed.validate().ok;
            Ok((glue_artifact(&composed), if ok { 0 } else { 1 }))
        }

        Command::Dzero { space } => {
            let s = resolve_space_input(space, seed)?;
            Ok((glue_artifact(&identity_glue(&s)), 0))
        }

        Command::Adjoint { g } => {
            let glue = resolve_glue_input(g, seed)?;
            Ok((glue_artifact(&glue.adjoint()), 0))
        }

        Command::Meet { g1, g2 } => {
            let a = resolve_glue_input(g1, seed)?;
            let b = resolve_glue_input(g2, seed)?;
            let meet = a.meet(&b).map_err(input_error)?;
            let ok = meet.validate().ok;
            Ok((glue_artifact(&meet), if ok { 0 } else { 1 }))
        }

        Command::FromMap { map, epsilon } => {
            let f = resolve_map_input(map, seed)?;
            let glue = f.glue(*epsilon).map_err(input_error)?;
            let ok = glue.validate().ok;
            Ok((glue_artifact(&glue), if ok { 0 } else { 1 }))
        }

        Command::Defect { map } => {
            let f = resolve_map_input(map, seed)?;
            let report = f.defect();
            Ok((to_report(&report), 0))
        }

        Command::ExtractMap { g, bound } => {
            let glue = resolve_glue_input(g, seed)?;
            match extract_close_map(&glue, *bound) {
                ExtractOutcome::Map(f) => {
                    let value: Value =
                        serde_json::from_str(&io::map_to_str(&f)).expect("map json parses");
                    Ok((json!({"found": true, "map": value}), 0))
                }
                ExtractOutcome::Failure { witness } => Ok((
                    json!({
                        "found": false,
                        "witness": witness.map(|(label, dist)| {
                            json!({"point": label, "nearest": round12(dist)})
                        }),
                    }),
                    1,
                )),
            }
        }

        Command::NearIdentity { g } => {
            let glue = resolve_glue_input(g, seed)?;
            let report = near_identity_check(&glue).map_err(input_error)?;
            let code = if report.ok { 0 } else { 1 };
            Ok((to_report(&report), code))
        }

        Command::BandDecompose { operator, g } => {
            let op = resolve_operator_input(operator)?;
            let glue = g
                .as_ref()
                .map(|s| resolve_glue_input(s, seed))
                .transpose()?;
            let decomposition = band_decompose(&op);
            let mut bands = Vec::new();
            for (i, band) in decomposition.bands.iter().enumerate() {
                let propagation = glue
                    .as_ref()
                    .map(|g| band.propagation(g))
                    .transpose()
                    .map_err(input_error)?;
                bands.push(json!({
                    "band": i,
                    "support": band.support_len(),
                    "propagation": propagation.map(round12),
                }));
            }
            Ok((
                json!({
                    "count": decomposition.count(),
                    "bands": bands,
                }),
                0,
            ))
        }

        Command::Factor { operator, g1, g2 } => {
            let op = resolve_operator_input(operator)?;
            let band = Band::from_operator(&op).map_err(input_error)?;
            let gxy = resolve_glue_input(g1, seed)?;
            let gyz = resolve_glue_input(g2, seed)?;
            let parts = factor_through(&band, &gxy, &gyz).map_err(input_error)?;
            let composed = gxy.compose(&gyz).map_err(input_error)?;
            let band_prop = band.propagation(&composed).map_err(input_error)?;
            let mut all_exact = true;
            let mut rows = Vec::new();
            for (i, part) in parts.iter().enumerate() {
                let product = part.s.compose(&part.r).map_err(input_error)?;
                let exact = product == part.band.to_operator();
                all_exact &= exact;
                rows.push(json!({
                    "part": i,
                    "support": part.band.support_len(),
                    "exact": exact,
                    "prop_r": round12(part.r.propagation(&gxy).map_err(input_error)?),
                    "prop_s": round12(part.s.propagation(&gyz).map_err(input_error)?),
                }));
            }
            Ok((
                json!({
                    "parts": rows,
                    "band_propagation": round12(band_prop),
                    "exact": all_exact,
                }),
                if all_exact { 0 } else { 1 },
            ))
        }

        Command::Propagation { operator, g } => {
            let op = resolve_operator_input(operator)?;
            let glue = resolve_glue_input(g, seed)?;
            let p = op.propagation(&glue).map_err(input_error)?;
            Ok((json!({"propagation": round12(p)}), 0))
        }

        Command::Norm { operator } => {
            let op = resolve_operator_input(operator)?;
            Ok((json!({"norm": round12(op.norm())}), 0))
        }

        Command::Profile { g, g_prime, radii } => {
            let a = resolve_glue_input(g, seed)?;
            let b = resolve_glue_input(g_prime, seed)?;
            let radii = radii_or_default(radii, None)?;
            let profile = domination_profile(&a, &b, &radii).map_err(input_error)?;
            Ok((to_report(&profile), 0))
        }

        Command::OrderCheck {
            family_g,
            family_h,
            radii,
            growth_threshold,
        } => {
            let fg = resolve_family_input(family_g, seed)?;
            let fh = resolve_family_input(family_h, seed)?;
            let radii = radii_or_default(radii, Some(&fg))?;
            let verdict = order_check(&fg, &fh, &radii, *growth_threshold).map_err(input_error)?;
            Ok((to_report(&verdict), 0))
        }

        Command::EquivCheck {
            family_g,
            family_h,
            radii,
            growth_threshold,
        } => {
            let fg = resolve_family_input(family_g, seed)?;
            let fh = resolve_family_input(family_h, seed)?;
            let radii = radii_or_default(radii, Some(&fg))?;
            let verdict =
                equivalence_check(&fg, &fh, &radii, *growth_threshold).map_err(input_error)?;
            Ok((to_report(&verdict), 0))
        }

        Command::InvSemi { g } => {
            let glue = resolve_glue_input(g, seed)?;
            let report = inv_semi_check(&glue).map_err(input_error)?;
            let code = if report.ok { 0 } else { 1 };
            Ok((to_report(&report), code))
        }

        Command::Idempotent { family } => {
            let fam = resolve_family_input(family, seed)?;
            let report = idempotent_check(&fam).map_err(input_error)?;
            Ok((to_report(&report), 0))
        }

        Command::Selfadjoint { family } => {
            let fam = resolve_family_input(family, seed)?;
            let report = selfadjoint_check(&fam).map_err(input_error)?;
            Ok((to_report(&report), 0))
        }

        Command::JoinFeasible { g1, g2, bound } => {
            let a = resolve_glue_input(g1, seed)?;
            let b = resolve_glue_input(g2, seed)?;
            match upper_bound_feasibility(&a, &b, *bound).map_err(input_error)? {
                UpperBoundOutcome::Feasible(glue) => Ok((
                    json!({"feasible": true, "glue": glue_artifact(&glue)}),
                    0,
                )),
                UpperBoundOutcome::Obstruction(cert) => Ok((
                    json!({"feasible": false, "certificate": to_report(&cert)}),
                    1,
                )),
                UpperBoundOutcome::InfeasibleChain {
                    side,
                    a,
                    b,
                    closure,
                    required,
                } => Ok((
                    json!({
                        "feasible": false,
                        "certificate": null,
                        "chain": {
                            "side": side, "a": a, "b": b,
                            "closure": round12(closure),
                            "required": round12(required),
                        },
                    }),
                    1,
                )),
            }
        }

        Command::ClosePairs { g, bound } => {
            let glue = resolve_glue_input(g, seed)?;
            Ok((to_report(&close_pair_matching(&glue, *bound)), 0))
        }

        Command::Demo { scenario, max_n } => run_demo(scenario, *max_n),
    }
}

fn validate_input(
    space: &Option<String>,
    glue: &Option<String>,
    map: &Option<String>,
    operator: &Option<String>,
    seed: u64,
) -> Result<ValidationReport, Failure> {
    if let Some(s) = space {
        return if Path::new(s).is_file() {
            Ok(io::load_space(s).map_err(input_error)?.1)
        } else {
            Ok(retry_with_seed(s, seed, catalog::resolve_space)
                .map_err(input_error)?
                .validate())
        };
    }
    if let Some(g) = glue {
        return if Path::new(g).is_file() {
            Ok(io::load_glue(g).map_err(input_error)?.1)
        } else {
            Ok(retry_with_seed(g, seed, catalog::resolve_glue)
                .map_err(input_error)?
                .validate())
        };
    }
    if let Some(m) = map {
        return if Path::new(m).is_file() {
            Ok(io::load_map(m).map_err(input_error)?.1)
        } else {
            let map = retry_with_seed(m, seed, catalog::resolve_map).map_err(input_error)?;
            let domain = map.domain().validate();
            if domain.ok {
                Ok(map.codomain().validate())
            } else {
                Ok(domain)
            }
        };
    }
    Ok(io::load_operator(operator.as_ref().expect("one input chosen"))
        .map_err(input_error)?
        .1)
}

fn glue_artifact(glue: &GlueMetric) -> Value {
    let mut v: Value = serde_json::from_str(&io::glue_to_str(glue)).expect("glue json parses");
    round_value(&mut v);
    v
}

// ---------------------------------------------------------------------------
// Demos
// ---------------------------------------------------------------------------

fn run_demo(scenario: &str, max_n: usize) -> CliResult {
    match scenario {
        "idem" => {
            let idem = catalog::idem_scenario(max_n).map_err(input_error)?;
            let dzero = catalog::dzero_family(max_n).map_err(input_error)?;
            let radii = default_radii(&dzero).map_err(input_error)?;

            let selfadj = selfadjoint_check(&idem).map_err(input_error)?;
            let idem_report = idempotent_check(&idem).map_err(input_error)?;
            let equiv = equivalence_check(&idem, &dzero, &radii, DEFAULT_GROWTH_THRESHOLD)
                .map_err(input_error)?;

            let expected = selfadj.selfadjoint
                && selfadj.uniform_bound == 0.0
                && idem_report.idempotent
                && idem_report.uniform_bound == 0.5
                && equiv.forward.relation == OrderRelation::HoldsBounded
                && equiv.backward.relation == OrderRelation::FailsGrowing
                && !equiv.equivalent;
            Ok((
                json!({
                    "scenario": "idem",
                    "max_n": max_n,
                    "selfadjoint": to_report(&selfadj),
                    "idempotent": to_report(&idem_report),
                    "equivalence": to_report(&equiv),
                    "pattern_confirmed": expected,
                }),
                if expected { 0 } else { 1 },
            ))
        }
        "nonupper" => {
            let (f1, f2) = catalog::nonupper_scenario(max_n).map_err(input_error)?;
            let g1 = f1.member(max_n).map_err(input_error)?;
            let g2 = f2.member(max_n).map_err(input_error)?;
            let outcome = upper_bound_feasibility(&g1, &g2, 3.0).map_err(input_error)?;
            let (value, obstructed) = match outcome {
                UpperBoundOutcome::Obstruction(cert) => (to_report(&cert), true),
                _ => (Value::Null, false),
            };
            // Control: two copies of d0 always have an upper bound.
            let s = catalog::z_interval(max_n);
            let d0 = identity_glue(&s);
            let control = matches!(
                upper_bound_feasibility(&d0, &d0, 1.0).map_err(input_error)?,
                UpperBoundOutcome::Feasible(g) if g.validate().ok
            );
            let expected = obstructed && control;
            Ok((
                json!({
                    "scenario": "nonupper",
                    "max_n": max_n,
                    "certificate": value,
                    "control_feasible": control,
                    "pattern_confirmed": expected,
                }),
                if expected { 0 } else { 1 },
            ))
        }
        "sparse-line" => {
            let line = catalog::sparse_line(max_n);
            let defect = line.reflection.defect();
            let glue = line.reflection.glue(1.0).map_err(input_error)?;
            let glue_ok = glue.validate().ok;
            let sandwich =
                sandwich_check(&line.reflection, &line.reflection, 1.0).map_err(input_error)?;
            let expected =
                defect.defect.is_finite() && defect.defect > 0.0 && glue_ok && sandwich.passes;
            Ok((
                json!({
                    "scenario": "sparse-line",
                    "max_n": max_n,
                    "defect": to_report(&defect),
                    "injective_up_to": line.injective_up_to,
                    "collisions": line.collisions.len(),
                    "glue_valid": glue_ok,
                    "sandwich": to_report(&sandwich),
                    "pattern_confirmed": expected,
                }),
                if expected { 0 } else { 1 },
            ))
        }
        other => Err(input_error(format!(
            "unknown scenario {other:?}; expected idem, nonupper, or sparse-line"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

fn render_csv(report: &Value) -> Option<String> {
    // Band decomposition: one line per band.
    if let Some(bands) = report.get("bands").and_then(Value::as_array) {
        let mut out = String::from("band,support,propagation\n");
        for band in bands {
            let p = band
                .get("propagation")
                .and_then(Value::as_f64)
                .map(|x| x.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", band["band"], band["support"], p));
        }
        return Some(out);
    }
    // Single profile: {radii, values}.
    if let (Some(radii), Some(values)) = (report.get("radii"), report.get("values")) {
        let mut out = String::from("radius,h\n");
        for (r, v) in radii.as_array()?.iter().zip(values.as_array()?) {
            let v = v
                .as_f64()
                .map(|x| x.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{r},{v}\n"));
        }
        return Some(out);
    }
    // Order verdict: evidence table of (n, R, h) triples.
    let evidence = report.get("evidence")?;
    let radii = evidence.get("radii")?.as_array()?;
    let per_index = evidence.get("per_index")?.as_array()?;
    let mut out = String::from("n,radius,h\n");
    for row in per_index {
        let pair = row.as_array()?;
        let n = &pair[0];
        for (r, v) in radii.iter().zip(pair[1].as_array()?) {
            let v = v
                .as_f64()
                .map(|x| x.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{n},{r},{v}\n"));
        }
    }
    Some(out)
}

fn emit(cli: &Cli, report: &Value) -> Result<(), Failure> {
    let body = match cli.format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(report).expect("report serializes");
            text.push('\n');
            text
        }
        Format::Csv => render_csv(report).ok_or_else(|| {
            input_error("csv output is only available for profile and order-check reports")
        })?,
    };
    match &cli.output {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => {
            std::fs::write(path, body).map_err(input_error)?;
            let meta = json!({
                "tool": "roe-calc",
                "version": env!("CARGO_PKG_VERSION"),
                "rng": catalog::RNG_NAME,
                "argv": std::env::args().collect::<Vec<_>>(),
                "unix_time": std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            });
            let meta_path = path.with_extension(match path.extension() {
                Some(e) => format!("{}.meta.json", e.to_string_lossy()),
                None => "meta.json".into(),
            });
            std::fs::write(
                meta_path,
                serde_json::to_string_pretty(&meta).expect("meta serializes"),
            )
            .map_err(input_error)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("ROE_CALC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    match run(&cli) {
        Ok((report, code)) => {
            if let Err(failure) = emit(&cli, &report) {
                eprintln!("roe-calc: {}", failure.message);
                return ExitCode::from(failure.code);
            }
            ExitCode::from(code)
        }
        Err(failure) => {
            eprintln!("roe-calc: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
