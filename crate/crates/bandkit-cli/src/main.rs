//! `bandkit` — command-line interface to the band toolkit.
//!
//! Exit codes: `0` success, `1` negative domain verdict (not homogeneous,
//! no amalgam within the bound, audit incomplete, a lemma check failed),
//! `2` invalid input or usage.

mod doc;
mod dot;
mod recipes;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use bandkit::catalog::{catalog_store, enumerate_bands, verify_lemma_suite, BandCatalog};
use bandkit::decomp::mclean_decompose;
use bandkit::fraisse::{
    amalgamate, audit_extension_property, grow_stage, ClassConstraint, FraisseError, StageChain,
};
use bandkit::green::compute_green;
use bandkit::homog::{
    classify_finite, is_homogeneous, is_k_homogeneous, is_structure_homogeneous, Classification,
    HomogWitness,
};
use bandkit::variety::variety_profile;
use bandkit::FiniteBand;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bandkit", version, about = "Compute with finite bands (idempotent semigroups)")]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a band document is a well-formed band.
    Validate {
        /// Band document (text or JSON); stdin when omitted.
        file: Option<PathBuf>,
    },
    /// Green's relations, structure decomposition and variety membership.
    Analyze {
        file: Option<PathBuf>,
    },
    /// Decide homogeneity (full, k-bounded, or structure-homogeneity).
    Homog {
        file: Option<PathBuf>,
        /// Only require extension of partial isomorphisms with at most K
        /// domain elements.
        #[arg(long, conflicts_with = "structure")]
        k: Option<usize>,
        /// Decide structure-homogeneity instead.
        #[arg(long)]
        structure: bool,
    },
    /// Classify: homogeneous bands are exactly the rectangular ones.
    Classify {
        file: Option<PathBuf>,
    },
    /// Build a band from a recipe and print its document.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
    },
    /// Enumerate bands of a given order up to isomorphism.
    Enumerate {
        #[arg(long)]
        order: usize,
        /// Also build the full catalog up to ORDER and store it here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the structural lemma suite over the catalog.
    VerifySuite {
        #[arg(long)]
        max_order: usize,
    },
    /// Solve an amalgamation problem.
    Amalgamate {
        /// JSON problem file: class, base, part1, part2, leg1, leg2.
        #[arg(long)]
        problem: PathBuf,
        /// Largest amalgam order to accept.
        #[arg(long, default_value_t = 32)]
        bound: usize,
    },
    /// Grow and audit stage chains toward a universal object.
    Fraisse {
        #[command(subcommand)]
        action: FraisseAction,
    },
    /// Render a Hasse diagram in DOT format.
    ExportDot {
        /// `order` for the natural partial order, `semilattice` for the
        /// structure semilattice.
        mode: DotMode,
        file: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConstructKind {
    /// Rectangular band on ROWS x COLS elements.
    Rect { rows: usize, cols: usize },
    /// Semilattice from a poset spec: {"n", "leq": [[a,b],...]}.
    Semilattice {
        #[arg(long)]
        spec: String,
    },
    /// Strong semilattice of rectangular bands: {"y", "dims", "psi"}.
    Strong {
        #[arg(long)]
        spec: String,
    },
    /// Spined product: {"left", "right", "spine", "left_map", "right_map"}.
    Spined {
        #[arg(long)]
        spec: String,
    },
    /// Direct product Y x B(n,m): {"y", "n", "m"}.
    Direct {
        #[arg(long)]
        spec: String,
    },
    /// Image-trivial truncation: {"parents", "n", "m", "k", "eps"}.
    ImageTrivial {
        #[arg(long)]
        spec: String,
    },
    /// D-covering chain: {"levels", "n", "m"}.
    Chain {
        #[arg(long)]
        spec: String,
    },
}

#[derive(Subcommand)]
enum FraisseAction {
    /// Extend the stage chain by amalgamating pending extension patterns.
    Grow {
        /// all-bands, normal, left-normal, right-normal or semilattices.
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 2)]
        stages: usize,
        /// Largest stage order allowed while growing.
        #[arg(long, default_value_t = 512)]
        budget: usize,
    },
    /// Grow, then audit the one-point extension property.
    Audit {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 2)]
        stages: usize,
        #[arg(long, default_value_t = 512)]
        budget: usize,
        /// Audit subbands with at most K elements.
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DotMode {
    Order,
    Semilattice,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Command::Validate { file } => cmd_validate(cli.json, file),
        Command::Analyze { file } => cmd_analyze(cli.json, file),
        Command::Homog { file, k, structure } => cmd_homog(cli.json, file, *k, *structure),
        Command::Classify { file } => cmd_classify(cli.json, file),
        Command::Construct { kind } => cmd_construct(cli.json, kind),
        Command::Enumerate { order, out } => cmd_enumerate(cli.json, *order, out),
        Command::VerifySuite { max_order } => cmd_verify_suite(cli.json, *max_order),
        Command::Amalgamate { problem, bound } => cmd_amalgamate(cli.json, problem, *bound),
        Command::Fraisse { action } => cmd_fraisse(cli.json, action),
        Command::ExportDot { mode, file } => cmd_export_dot(cli.json, *mode, file),
    }
}

fn read_input(file: &Option<PathBuf>) -> Result<String, String> {
    match file {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| format!("stdin: {e}"))?;
            Ok(buf)
        }
    }
}

fn load_band(file: &Option<PathBuf>) -> Result<FiniteBand, String> {
    doc::parse_band(&read_input(file)?)
}

/// Resolve a `--spec` argument: inline JSON, or `@path` to read a file.
fn read_spec(spec: &str) -> Result<String, String> {
    match spec.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}")),
        None => Ok(spec.to_string()),
    }
}

fn parse_spec<T: serde::de::DeserializeOwned>(spec: &str) -> Result<T, String> {
    let text = read_spec(spec)?;
    serde_json::from_str(&text).map_err(|e| format!("spec: {e}"))
}

fn emit(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable value"));
}

fn witness_value(w: &HomogWitness) -> Value {
    json!({
        "dom": w.dom.sorted(),
        "map": w.map,
        "spine_automorphism": w.spine_automorphism,
    })
}

fn witness_text(w: &HomogWitness) -> String {
    let pairs: Vec<String> = w
        .dom
        .sorted()
        .iter()
        .zip(&w.map)
        .map(|(&e, &img)| format!("{e} -> {img}"))
        .collect();
    let mut s = format!("unextendable partial isomorphism: {}", pairs.join(", "));
    if let Some(auto) = &w.spine_automorphism {
        s.push_str(&format!(" (structure automorphism {auto:?})"));
    }
    s
}

fn cmd_validate(as_json: bool, file: &Option<PathBuf>) -> Result<u8, String> {
    let band = load_band(file)?;
    if as_json {
        emit(&json!({ "n": band.order(), "valid": true }));
    } else {
        println!("valid band of order {}", band.order());
    }
    Ok(0)
}

fn cmd_analyze(as_json: bool, file: &Option<PathBuf>) -> Result<u8, String> {
    let band = load_band(file)?;
    let green = compute_green(&band);
    let m = mclean_decompose(&band);
    let profile = variety_profile(&band);
    let names: Vec<&str> = profile.members().iter().map(|f| f.short_name()).collect();
    let dims: Vec<(usize, usize)> = (0..m.class_count()).map(|a| m.class_dims(a)).collect();
    if as_json {
        emit(&json!({
            "n": band.order(),
            "green": {
                "r_classes": green.r_classes.len(),
                "l_classes": green.l_classes.len(),
                "d_classes": green.d_classes.len(),
            },
            "mclean": {
                "y_order": m.class_count(),
                "dims": dims,
            },
            "varieties": names,
        }));
    } else {
        println!("order: {}", band.order());
        println!(
            "green: {} R-classes, {} L-classes, {} D-classes",
            green.r_classes.len(),
            green.l_classes.len(),
            green.d_classes.len()
        );
        println!("structure semilattice: |Y| = {}", m.class_count());
        for (alpha, (r, c)) in dims.iter().enumerate() {
            println!("  class {alpha}: {r}x{c} ({} elements)", r * c);
        }
        if names.is_empty() {
            println!("varieties: (none)");
        } else {
            println!("varieties: {}", names.join(", "));
        }
    }
    Ok(0)
}

fn cmd_homog(
    as_json: bool,
    file: &Option<PathBuf>,
    k: Option<usize>,
    structure: bool,
) -> Result<u8, String> {
    let band = load_band(file)?;
    let (mode, verdict) = if structure {
        ("structure", is_structure_homogeneous(&band))
    } else if let Some(k) = k {
        ("k", is_k_homogeneous(&band, k))
    } else {
        ("full", is_homogeneous(&band))
    };
    let label = match mode {
        "structure" => "structure-homogeneous".to_string(),
        "k" => format!("{}-homogeneous", k.expect("k mode")),
        _ => "homogeneous".to_string(),
    };
    if as_json {
        emit(&json!({
            "mode": mode,
            "k": k,
            "homogeneous": verdict.is_homogeneous(),
            "witness": verdict.witness().map(witness_value),
        }));
    } else if verdict.is_homogeneous() {
        println!("{label}");
    } else {
        println!("not {label}");
        if let Some(w) = verdict.witness() {
            println!("{}", witness_text(w));
        }
    }
    Ok(if verdict.is_homogeneous() { 0 } else { 1 })
}

fn cmd_classify(as_json: bool, file: &Option<PathBuf>) -> Result<u8, String> {
    let band = load_band(file)?;
    match classify_finite(&band) {
        Classification::Homogeneous { rows, cols } => {
            if as_json {
                emit(&json!({
                    "homogeneous": true,
                    "rows": rows,
                    "cols": cols,
                    "witness": Value::Null,
                }));
            } else {
                println!("homogeneous: rectangular band {rows}x{cols}");
            }
            Ok(0)
        }
        Classification::NotHomogeneous(w) => {
            if as_json {
                emit(&json!({
                    "homogeneous": false,
                    "rows": Value::Null,
                    "cols": Value::Null,
                    "witness": witness_value(&w),
                }));
            } else {
                println!("not homogeneous (so not rectangular)");
                println!("{}", witness_text(&w));
            }
            Ok(1)
        }
    }
}

fn cmd_construct(as_json: bool, kind: &ConstructKind) -> Result<u8, String> {
    let band = match kind {
        ConstructKind::Rect { rows, cols } => recipes::build_rect(*rows, *cols)?,
        ConstructKind::Semilattice { spec } => {
            parse_spec::<recipes::PosetRecipe>(spec)?.build()?
        }
        ConstructKind::Strong { spec } => {
            recipes::build_strong_recipe(&parse_spec::<recipes::StrongRecipe>(spec)?)?
        }
        ConstructKind::Spined { spec } => {
            recipes::build_spined_recipe(&parse_spec::<recipes::SpinedRecipe>(spec)?)?
        }
        ConstructKind::Direct { spec } => {
            recipes::build_direct_recipe(&parse_spec::<recipes::DirectRecipe>(spec)?)?
        }
        ConstructKind::ImageTrivial { spec } => {
            recipes::build_image_trivial_recipe(&parse_spec::<recipes::ImageTrivialRecipe>(spec)?)?
        }
        ConstructKind::Chain { spec } => {
            recipes::build_chain_recipe(&parse_spec::<recipes::ChainRecipe>(spec)?)?
        }
    };
    if as_json {
        emit(&doc::band_value(&band));
    } else {
        print!("{}", doc::render_text(&band));
    }
    Ok(0)
}

fn cmd_enumerate(as_json: bool, order: usize, out: &Option<PathBuf>) -> Result<u8, String> {
    let bands = enumerate_bands(order).map_err(|e| e.to_string())?;
    if let Some(path) = out {
        let catalog = BandCatalog::build(order).map_err(|e| e.to_string())?;
        catalog_store(&catalog, path).map_err(|e| e.to_string())?;
    }
    if as_json {
        emit(&json!({
            "order": order,
            "count": bands.len(),
            "catalog": out.as_ref().map(|p| p.display().to_string()),
        }));
    } else {
        println!("order {order}: {} bands up to isomorphism", bands.len());
        if let Some(path) = out {
            println!("catalog written to {}", path.display());
        }
    }
    Ok(0)
}

fn cmd_verify_suite(as_json: bool, max_order: usize) -> Result<u8, String> {
    let catalog = BandCatalog::build(max_order).map_err(|e| e.to_string())?;
    let report = verify_lemma_suite(&catalog);
    if as_json {
        let checks: Vec<Value> = report
            .checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "passed": c.passed,
                    "witness": c.witness,
                    "millis": c.millis as u64,
                })
            })
            .collect();
        emit(&json!({
            "max_order": max_order,
            "passed": report.all_passed(),
            "checks": checks,
        }));
    } else {
        print!("{}", report.summary());
        println!(
            "{}/{} checks passed over orders 1..={max_order}",
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len()
        );
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_amalgamate(as_json: bool, problem: &PathBuf, bound: usize) -> Result<u8, String> {
    let text = std::fs::read_to_string(problem).map_err(|e| format!("{}: {e}", problem.display()))?;
    let recipe: recipes::ProblemRecipe =
        serde_json::from_str(&text).map_err(|e| format!("problem: {e}"))?;
    let p = recipes::build_problem(&recipe)?;
    match amalgamate(&p, bound) {
        Ok(am) => {
            let strategy = match am.strategy() {
                bandkit::fraisse::AmalgamStrategy::Trivial => "trivial",
                bandkit::fraisse::AmalgamStrategy::CanonicalPushout => "canonical-pushout",
                bandkit::fraisse::AmalgamStrategy::RetractionProduct => "retraction-product",
                bandkit::fraisse::AmalgamStrategy::Exhaustive => "exhaustive",
            };
            if as_json {
                emit(&json!({
                    "found": true,
                    "strategy": strategy,
                    "band": doc::band_value(am.band()),
                    "leg1": am.leg1().map,
                    "leg2": am.leg2().map,
                    "bound": bound,
                    "exhausted_to": Value::Null,
                }));
            } else {
                println!("amalgam of order {} via {strategy}", am.band().order());
                print!("{}", doc::render_text(am.band()));
                println!("leg1: {:?}", am.leg1().map);
                println!("leg2: {:?}", am.leg2().map);
            }
            Ok(0)
        }
        Err(FraisseError::NotFoundWithinBound { bound, exhausted_to }) => {
            if as_json {
                emit(&json!({
                    "found": false,
                    "strategy": Value::Null,
                    "band": Value::Null,
                    "leg1": Value::Null,
                    "leg2": Value::Null,
                    "bound": bound,
                    "exhausted_to": exhausted_to,
                }));
            } else {
                println!(
                    "no amalgam within order bound {bound} (search exhausted to {exhausted_to})"
                );
            }
            Ok(1)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn grow_chain(
    class: &str,
    stages: usize,
    budget: usize,
) -> Result<(StageChain, bool, bool), String> {
    let constraint: ClassConstraint = class.parse()?;
    let seed = FiniteBand::from_flat(1, vec![0]).expect("point band");
    let mut chain = StageChain::new(seed, constraint).map_err(|e| e.to_string())?;
    let mut saturated = false;
    let mut exhausted = false;
    for _ in 0..stages {
        match grow_stage(&mut chain, budget) {
            Ok(true) => {}
            Ok(false) => {
                saturated = true;
                break;
            }
            Err(FraisseError::BudgetExhausted { .. }) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok((chain, saturated, exhausted))
}

fn cmd_fraisse(as_json: bool, action: &FraisseAction) -> Result<u8, String> {
    match action {
        FraisseAction::Grow { class, stages, budget } => {
            let (chain, saturated, exhausted) = grow_chain(class, *stages, *budget)?;
            let orders: Vec<usize> = chain.stages().iter().map(|b| b.order()).collect();
            if as_json {
                emit(&json!({
                    "class": chain.constraint().name(),
                    "stages": orders,
                    "saturated": saturated,
                    "exhausted": exhausted,
                }));
            } else {
                let path: Vec<String> = orders.iter().map(|o| o.to_string()).collect();
                println!("stage orders: {}", path.join(" -> "));
                if saturated {
                    println!("saturated: every pending extension is already realized");
                }
                if exhausted {
                    println!("stage budget exhausted before the last growth step");
                }
            }
            Ok(if exhausted { 1 } else { 0 })
        }
        FraisseAction::Audit { class, stages, budget, k } => {
            let (chain, _, exhausted) = grow_chain(class, *stages, *budget)?;
            let audit = audit_extension_property(&chain, *k);
            let orders: Vec<usize> = chain.stages().iter().map(|b| b.order()).collect();
            let complete = audit.is_complete() && !exhausted;
            if as_json {
                emit(&json!({
                    "class": chain.constraint().name(),
                    "k": k,
                    "stages": orders,
                    "total": audit.total(),
                    "realized": audit.realized_count(),
                    "complete": complete,
                }));
            } else {
                let path: Vec<String> = orders.iter().map(|o| o.to_string()).collect();
                println!("stage orders: {}", path.join(" -> "));
                println!(
                    "k = {k}: {}/{} one-point extensions realized in the final stage",
                    audit.realized_count(),
                    audit.total()
                );
                println!("complete: {}", if complete { "yes" } else { "no" });
            }
            Ok(if complete { 0 } else { 1 })
        }
    }
}

fn cmd_export_dot(as_json: bool, mode: DotMode, file: &Option<PathBuf>) -> Result<u8, String> {
    let band = load_band(file)?;
    let (name, text) = match mode {
        DotMode::Order => ("order", dot::order_dot(&band)),
        DotMode::Semilattice => ("semilattice", dot::semilattice_dot(&band)),
    };
    if as_json {
        emit(&json!({ "mode": name, "dot": text }));
    } else {
        print!("{text}");
    }
    Ok(0)
}
