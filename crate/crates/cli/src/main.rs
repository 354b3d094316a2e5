//! Batch front end: loads scenario files, dispatches to the engine, and
//! prints deterministic reports. Exit codes: 0 success, 1 validation or
//! computation failure, 2 parse error.

mod io;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use canmeas::lattice::BilinearForm;
use canmeas::measure::{
    canonical_measure, discrete_measure, pushforward, spectrum_scenario,
    validate_dimension_bounds, Ambient, PolytopalMeasure,
};
use canmeas::modelfun::{delaunay_model_function, ModelFunction};
use canmeas::periodic::PeriodicDecomposition;
use canmeas::polytope::Polytope;
use canmeas::rat::{rint, QVec, Rat};

use io::{
    digest, emit_scenario, fmt_rat, parse_inline_matrix, parse_rat, parse_region,
    read_scenario, show_rat, show_vec, CliError, CliResult, Loaded,
};

#[derive(Parser)]
#[command(
    name = "canmeas",
    about = "Canonical measures on tropicalized subvarieties of abelian varieties",
    long_about = None,
    after_help = "CSV output (--csv) writes the rows of the main result table verbatim; \
the first line holds the column names of the command (limit: m,total,mass_omega,deviation; \
measure/pushforward: index,dim,density,mass,support)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    /// Path to a scenario file.
    #[arg(long)]
    scenario: String,
}

#[derive(Args)]
struct CsvArg {
    /// Write the result table as CSV to this path.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check scenario, decomposition and model-function consistency.
    Validate(ScenarioArg),
    /// List the strata with their simplices, weights and non-degeneracy.
    Strata(ScenarioArg),
    /// Dual polytopes of the vertex classes of the model function.
    Dualize {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Form index used to generate a Delaunay model function when the
        /// scenario does not carry one.
        #[arg(long, value_delimiter = ',')]
        bundle_indices: Option<Vec<usize>>,
    },
    /// Verify the dual tiling identity of the model function.
    TilingCheck(ScenarioArg),
    /// The canonical measure in simplex coordinates.
    Measure {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        csv: CsvArg,
    },
    /// The canonical measure pushed forward to the tropical torus.
    Pushforward {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        csv: CsvArg,
    },
    /// Convergence table of the discrete measures against the limit.
    Limit {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Subdivision levels, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        m_list: Vec<u32>,
        /// Test region as semicolon-separated vertices "v1;v2;...".
        #[arg(long)]
        omega: Option<String>,
        #[command(flatten)]
        csv: CsvArg,
    },
    /// Generate a torus scenario from the Delaunay decomposition of a form.
    GenDelaunay {
        /// Symmetric positive-definite matrix, rows separated by ';'.
        #[arg(long)]
        form: String,
        #[arg(long, default_value_t = 4)]
        radius: u32,
        /// Output path for the scenario file (stdout when omitted).
        #[arg(long)]
        out: Option<String>,
    },
    /// Generate the product-case scenario with its closed-form table.
    GenProduct {
        /// Abelian part dimension.
        #[arg(long)]
        b: usize,
        /// Toric rank.
        #[arg(long)]
        n: usize,
        /// Excess dimension.
        #[arg(long)]
        m: usize,
        /// Degree of the first factor bundle.
        #[arg(long, default_value = "1")]
        deg: String,
        /// Toric form matrix, rows separated by ';'.
        #[arg(long)]
        form: String,
        /// Output path for the scenario file (stdout when omitted).
        #[arg(long)]
        out: Option<String>,
    },
    /// Build a plurisimplex from a block specification file.
    Plurisimplex {
        /// Path to a JSON block specification.
        #[arg(long)]
        block: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(&cli.command);
    eprintln!("elapsed: {} ms", start.elapsed().as_millis());
    match result {
        Ok(code) => code,
        Err(CliError::Parse(m)) => {
            eprintln!("parse error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn header(command: &str, path: &str) -> CliResult<Vec<String>> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Parse(format!("cannot read {path}: {e}")))?;
    Ok(vec![
        format!("command: {command}"),
        format!("input: {path} (digest {})", digest(&bytes)),
    ])
}

fn print_report(lines: &[String]) {
    for l in lines {
        println!("{l}");
    }
}

fn write_csv(path: &Option<String>, head: &str, rows: &[Vec<String>]) -> CliResult<()> {
    if let Some(path) = path {
        let mut out = String::from(head);
        out.push('\n');
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::Invalid(format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

fn require_mf(loaded: &Loaded) -> CliResult<&ModelFunction> {
    loaded
        .scn
        .mf
        .as_ref()
        .ok_or_else(|| CliError::Invalid("the scenario has no model function".into()))
}

fn measure_table(
    mu: &PolytopalMeasure,
    symbols_hint: &str,
) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for (i, p) in mu.pieces.iter().enumerate() {
        let mass = p.mass().map(|m| show_rat(&m)).unwrap_or_else(|_| "?".into());
        let verts: Vec<String> = p.support.vertices.iter().map(|v| show_vec(v)).collect();
        let place = match p.ambient {
            Ambient::Simplex(s) => format!("simplex {s}"),
            Ambient::Torus => "torus".to_string(),
        };
        lines.push(format!(
            "piece {i}: {place} dim {} density {} mass {} support {}",
            p.dim,
            show_rat(&p.density),
            mass,
            verts.join(" ")
        ));
        rows.push(vec![
            i.to_string(),
            p.dim.to_string(),
            fmt_rat(&p.density),
            p.mass().map(|m| fmt_rat(&m)).unwrap_or_else(|_| "?".into()),
            verts.join(" "),
        ]);
    }
    for (i, a) in mu.atoms.iter().enumerate() {
        lines.push(format!(
            "atom {i}: point {} mass {}{}",
            show_vec(&a.point),
            show_rat(&a.mass),
            a.stratum
                .map(|s| format!(" (stratum {s})"))
                .unwrap_or_default()
        ));
        rows.push(vec![
            format!("atom{i}"),
            "0".to_string(),
            String::new(),
            fmt_rat(&a.mass),
            show_vec(&a.point),
        ]);
    }
    let _ = symbols_hint;
    (lines, rows)
}

fn run(cmd: &Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Validate(sa) => cmd_validate(&sa.scenario),
        Command::Strata(sa) => cmd_strata(&sa.scenario),
        Command::Dualize { scenario, bundle_indices } => {
            cmd_dualize(&scenario.scenario, bundle_indices.as_deref())
        }
        Command::TilingCheck(sa) => cmd_tiling_check(&sa.scenario),
        Command::Measure { scenario, csv } => cmd_measure(&scenario.scenario, &csv.csv, false),
        Command::Pushforward { scenario, csv } => {
            cmd_measure(&scenario.scenario, &csv.csv, true)
        }
        Command::Limit { scenario, m_list, omega, csv } => {
            cmd_limit(&scenario.scenario, m_list, omega.as_deref(), &csv.csv)
        }
        Command::GenDelaunay { form, radius, out } => {
            cmd_gen_delaunay(form, *radius, out.as_deref())
        }
        Command::GenProduct { b, n, m, deg, form, out } => {
            cmd_gen_product(*b, *n, *m, deg, form, out.as_deref())
        }
        Command::Plurisimplex { block } => cmd_plurisimplex(block),
    }
}

fn cmd_validate(path: &str) -> CliResult<ExitCode> {
    let mut lines = header("validate", path)?;
    let (_, loaded) = read_scenario(path)?;
    let mut failed = false;
    let report = loaded.scn.validate();
    if report.ok() {
        lines.push("scenario: ok".to_string());
    } else {
        failed = true;
        for issue in &report.issues {
            lines.push(format!("scenario: {issue}"));
        }
    }
    if let Some(dec) = loaded.scn.mf.as_ref().map(|m| &m.dec).or(loaded.dec.as_ref()) {
        let dr = dec.validate();
        if dr.ok() {
            lines.push("face-to-face: ok".to_string());
            if dec.shift.iter().any(|g| !g.is_zero()) {
                let shift: Vec<String> =
                    dec.shift.iter().map(|g| io::show_gamma(g, &loaded.symbols)).collect();
                lines.push(format!("shift: ({})", shift.join(", ")));
            }
            let total: Rat = dec.cells.iter().map(|c| c.volume()).sum();
            let covol = dec.lattice.covolume()?;
            lines.push(format!("covering: {} = {}", show_rat(&total), show_rat(&covol)));
        } else {
            failed = true;
            for issue in &dr.issues {
                lines.push(format!("decomposition: {issue}"));
            }
        }
    }
    if let Some(mf) = &loaded.scn.mf {
        let mr = mf.validate();
        if mr.ok() {
            lines.push("model-function: ok".to_string());
        } else {
            failed = true;
            for issue in &mr.issues {
                lines.push(format!("model-function: {issue}"));
            }
        }
    }
    lines.push(format!("result: {}", if failed { "failed" } else { "ok" }));
    print_report(&lines);
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_strata(path: &str) -> CliResult<ExitCode> {
    let mut lines = header("strata", path)?;
    let (_, loaded) = read_scenario(path)?;
    let scn = &loaded.scn;
    let nondeg = scn.sk.nondegenerate_simplices(&scn.tm);
    for (s, st) in scn.sk.strata.iter().enumerate() {
        let sx = &scn.sk.simplices[s];
        let mut weights: Vec<String> = st
            .weights
            .table
            .iter()
            .map(|(k, v)| format!("{k:?}: {}", show_rat(v)))
            .collect();
        if weights.is_empty() {
            weights.push("none".to_string());
        }
        lines.push(format!(
            "stratum {s}: r {} e {} pi {} weights {{{}}} {}",
            sx.r,
            st.dim_stratum,
            show_rat(&sx.pi_val),
            weights.join(", "),
            if nondeg.contains(&s) { "non-degenerate" } else { "degenerate" }
        ));
    }
    for inc in &scn.sk.incidence {
        lines.push(format!("incidence: {} <= {}", inc.sub, inc.sup));
    }
    print_report(&lines);
    Ok(ExitCode::SUCCESS)
}

fn cmd_dualize(path: &str, bundle_indices: Option<&[usize]>) -> CliResult<ExitCode> {
    let mut lines = header("dualize", path)?;
    let (_, loaded) = read_scenario(path)?;
    let mf = match &loaded.scn.mf {
        Some(mf) => mf.clone(),
        None => {
            let idx = bundle_indices.and_then(|v| v.first().copied()).unwrap_or(0);
            let form = loaded
                .scn
                .forms
                .get(idx)
                .ok_or_else(|| CliError::Invalid(format!("no form with index {idx}")))?;
            delaunay_model_function(form.clone(), loaded.scn.lattice.clone(), 8)?
        }
    };
    for v in mf.vertex_classes() {
        let dual = mf.dual_polytope(&v)?;
        let verts: Vec<String> = dual.vertices.iter().map(|x| show_vec(x)).collect();
        lines.push(format!(
            "vertex {}: dual volume {} vertices {}",
            show_vec(&v),
            show_rat(&dual.volume()),
            verts.join(" ")
        ));
    }
    print_report(&lines);
    Ok(ExitCode::SUCCESS)
}

fn cmd_tiling_check(path: &str) -> CliResult<ExitCode> {
    let mut lines = header("tiling-check", path)?;
    let (_, loaded) = read_scenario(path)?;
    let mf = require_mf(&loaded)?;
    let report = mf.dual_tiling_check()?;
    if report.ok() {
        lines.push("tiling: ok".to_string());
        print_report(&lines);
        Ok(ExitCode::SUCCESS)
    } else {
        for issue in &report.issues {
            lines.push(format!("tiling: {issue}"));
        }
        lines.push("result: failed".to_string());
        print_report(&lines);
        Ok(ExitCode::from(1))
    }
}

fn cmd_measure(path: &str, csv: &Option<String>, push: bool) -> CliResult<ExitCode> {
    let command = if push { "pushforward" } else { "measure" };
    let mut lines = header(command, path)?;
    let (_, loaded) = read_scenario(path)?;
    let scn = &loaded.scn;
    let report = scn.validate();
    if !report.ok() {
        for issue in &report.issues {
            lines.push(format!("scenario: {issue}"));
        }
        lines.push("result: failed".to_string());
        print_report(&lines);
        return Ok(ExitCode::from(1));
    }
    let mut mu = canonical_measure(scn)?;
    if push {
        mu = pushforward(&mu, &scn.tm, &scn.deg_f)?;
        let dims = validate_dimension_bounds(scn, &mu)?;
        lines.push(format!(
            "dimensions: {:?} within [{}, {}]",
            dims,
            scn.d.saturating_sub(scn.b),
            scn.d
        ));
    }
    let (table, rows) = measure_table(&mu, "");
    lines.extend(table);
    lines.push(format!("total mass: {}", show_rat(&mu.total_mass()?)));
    write_csv(csv, "index,dim,density,mass,support", &rows)?;
    print_report(&lines);
    Ok(ExitCode::SUCCESS)
}

fn cmd_limit(
    path: &str,
    m_list: &[u32],
    omega: Option<&str>,
    csv: &Option<String>,
) -> CliResult<ExitCode> {
    let mut lines = header("limit", path)?;
    let (_, loaded) = read_scenario(path)?;
    let scn = &loaded.scn;
    let mf = require_mf(&loaded)?;
    let mu = pushforward(&canonical_measure(scn)?, &scn.tm, &scn.deg_f)?;
    let region: Option<Polytope> = match omega {
        Some(s) => Some(parse_region(s, scn.n)?),
        None => None,
    };
    let limit_mass = match &region {
        Some(om) => mu.mass_on(om)?,
        None => mu.total_mass()?,
    };
    lines.push(format!("limit mass: {}", show_rat(&limit_mass)));
    let mut rows = Vec::new();
    for &m in m_list {
        let dm = discrete_measure(scn, mf, m)?;
        let total = dm.total_mass();
        let mass = match &region {
            Some(om) => dm.mass_on(om),
            None => total.clone(),
        };
        let diff = &mass - &limit_mass;
        let dev = if diff < Rat::from_integer(0.into()) { -diff } else { diff };
        lines.push(format!(
            "m {m}: total {} mass {} deviation {}",
            show_rat(&total),
            show_rat(&mass),
            show_rat(&dev)
        ));
        rows.push(vec![
            m.to_string(),
            fmt_rat(&total),
            fmt_rat(&mass),
            fmt_rat(&dev),
        ]);
    }
    write_csv(csv, "m,total,mass_omega,deviation", &rows)?;
    print_report(&lines);
    Ok(ExitCode::SUCCESS)
}

fn emit_scenario_file(loaded: &Loaded, out: Option<&str>) -> CliResult<()> {
    let file = emit_scenario(loaded);
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Invalid(format!("serialization failed: {e}")))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Invalid(format!("cannot write {path}: {e}")))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_gen_delaunay(form: &str, radius: u32, out: Option<&str>) -> CliResult<ExitCode> {
    let mat = parse_inline_matrix(form)?;
    let n = mat.rows;
    let form = BilinearForm::new(mat)?;
    let lattice = canmeas::lattice::Lattice::standard(n);
    let mf = delaunay_model_function(form.clone(), lattice.clone(), radius)?;
    if mf.dec.cells.iter().any(|c| c.vertices.len() != c.affine_dim().max(0) as usize + 1) {
        return Err(CliError::Invalid(
            "the Delaunay cells of this form are not simplices; only simplicial \
decompositions admit a torus skeleton (use tiling-check / dualize on the model \
function instead)"
                .into(),
        ));
    }
    let (sk, tm) = canmeas::skeleton::torus_skeleton(&mf.dec, rint(1))?;
    let scn = canmeas::measure::Scenario {
        n,
        b: 0,
        d: n,
        lattice,
        forms: vec![form; n],
        sk,
        tm,
        mf: Some(mf),
        deg_f: rint(1),
    };
    let loaded = Loaded { scn, dec: None, symbols: Vec::new() };
    let report = loaded.scn.validate();
    if !report.ok() {
        return Err(CliError::Invalid(format!(
            "generated scenario is inconsistent: {:?}",
            report.issues
        )));
    }
    emit_scenario_file(&loaded, out)?;
    eprintln!("generated delaunay scenario with {} cells", loaded.scn.mf.as_ref().unwrap().dec.cells.len());
    Ok(ExitCode::SUCCESS)
}

fn default_triangulation(n: usize) -> CliResult<PeriodicDecomposition> {
    let lattice = canmeas::lattice::Lattice::standard(n);
    let cells = match n {
        1 => vec![Polytope::from_vertices(1, &[vec![rint(0)], vec![rint(1)]])
            .map_err(CliError::from)?],
        2 => {
            let t1 = Polytope::from_vertices(
                2,
                &[
                    vec![rint(0), rint(0)],
                    vec![rint(1), rint(0)],
                    vec![rint(1), rint(1)],
                ],
            )
            .map_err(CliError::from)?;
            let t2 = Polytope::from_vertices(
                2,
                &[
                    vec![rint(0), rint(0)],
                    vec![rint(0), rint(1)],
                    vec![rint(1), rint(1)],
                ],
            )
            .map_err(CliError::from)?;
            vec![t1, t2]
        }
        _ => {
            return Err(CliError::Invalid(
                "built-in triangulations exist for n in {1, 2} only".into(),
            ))
        }
    };
    PeriodicDecomposition::new(lattice, cells).map_err(CliError::from)
}

fn cmd_gen_product(
    b: usize,
    n: usize,
    m: usize,
    deg: &str,
    form: &str,
    out: Option<&str>,
) -> CliResult<ExitCode> {
    let deg = parse_rat(deg)?;
    let mat = parse_inline_matrix(form)?;
    let form = BilinearForm::new(mat)?;
    let tri = default_triangulation(n)?;
    let (scn, closed) = spectrum_scenario(b, n, m, &deg, &form, &tri)?;
    let mut lines = vec![format!("command: gen-product b {b} n {n} m {m}")];
    for (s, mass) in &closed {
        lines.push(format!(
            "closed-form: stratum {s} (dim {}) mass {}",
            scn.sk.simplices[*s].r,
            show_rat(mass)
        ));
    }
    let loaded = Loaded { scn, dec: None, symbols: Vec::new() };
    emit_scenario_file(&loaded, out)?;
    for l in &lines {
        eprintln!("{l}");
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Deserialize)]
struct BlockFile {
    levels: Vec<BlockLevel>,
}

#[derive(serde::Deserialize)]
struct BlockLevel {
    sizes: Vec<usize>,
    bounds: Vec<BlockBound>,
}

#[derive(serde::Deserialize)]
struct BlockBound {
    #[serde(default)]
    coeffs: Vec<String>,
    constant: String,
}

fn cmd_plurisimplex(path: &str) -> CliResult<ExitCode> {
    let mut lines = header("plurisimplex", path)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {path}: {e}")))?;
    let file: BlockFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("cannot parse {path}: {e}")))?;
    let mut levels = Vec::new();
    for lv in &file.levels {
        let bounds = lv
            .bounds
            .iter()
            .map(|bb| {
                Ok(canmeas::pluriblock::AffineBound {
                    coeffs: bb
                        .coeffs
                        .iter()
                        .map(|s| parse_rat(s))
                        .collect::<CliResult<QVec>>()?,
                    constant: parse_rat(&bb.constant)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        levels.push(canmeas::pluriblock::LevelSpec { sizes: lv.sizes.clone(), bounds });
    }
    let spec = canmeas::pluriblock::BlockSpec { levels };
    let ps = canmeas::pluriblock::build_plurisimplex(&spec)?;
    lines.push(format!("dimension: {}", ps.polytope.dim));
    for v in &ps.polytope.vertices {
        lines.push(format!("vertex: {}", show_vec(v)));
    }
    if !ps.dropped.is_empty() {
        lines.push(format!("dropped coordinates: {:?}", ps.dropped));
    }
    let poset = canmeas::pluriblock::face_strata(&spec)?;
    lines.push(format!("components: {}", poset.components().len()));
    let max_dim = ps.polytope.affine_dim().max(0) as usize;
    for codim in 0..=max_dim {
        lines.push(format!(
            "codim {codim}: {} strata",
            poset.count_of_codim(codim)
        ));
    }
    print_report(&lines);
    Ok(ExitCode::SUCCESS)
}
