//! The `coplan` command line.
//!
//! Exit status: 0 success or validation passed, 1 validation errors, 2 usage
//! or input errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::catalog::{self, Catalog};
use crate::info_model::{AttributeRef, InfoModel};
use crate::kernel::{self, KernelError, RunOptions};
use crate::recommender::{self, MatchRequest, Weights};
use crate::scenario::Scenario;
use crate::taxonomy::Taxonomy;
use crate::triple_store::{self, PatternTerm, Store, Term, TriplePattern};
use crate::units::{self, UnitTable};
use crate::validator::{self, Severity};
use crate::vocab::{self, class, pred, Kind, RDF_TYPE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const QUERIES: [&str; 4] = [
    "components-by-domain",
    "attributes-without-candidate",
    "criteria-with-sources",
    "variables-by-dimension",
];

#[derive(Debug, Parser)]
#[command(
    name = "coplan",
    version,
    about = "Plan, validate and run co-simulation scenarios"
)]
struct Cli {
    #[command(flatten)]
    inputs: Inputs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Inputs {
    /// Component catalog file.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Information model file.
    #[arg(long, global = true)]
    info_model: Option<PathBuf>,
    /// Scenario file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// N-Triples store built by `ingest`; used for anything not given as a file.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Directory for written files.
    #[arg(long, global = true, default_value = "coplan-out")]
    out_dir: PathBuf,
    /// Topic taxonomy file.
    #[arg(long, global = true)]
    taxonomy: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project source files into one N-Triples store (out-dir/store.nt).
    Ingest {
        /// Catalog, information model, scenario or taxonomy files.
        paths: Vec<PathBuf>,
    },
    /// Rank catalog variables for an information-model attribute.
    Recommend {
        /// Attribute as object.attribute
        attribute: String,
        #[arg(long, default_value_t = 0.5)]
        w_unit: f64,
        #[arg(long, default_value_t = 0.3)]
        w_topic: f64,
        #[arg(long, default_value_t = 0.2)]
        w_range: f64,
    },
    /// Check a scenario against the catalog (and the information model).
    Validate,
    /// Insert missing unit transforms (out-dir/autofixed.scenario).
    Autofix,
    /// Execute a scenario built from builtin models.
    Run {
        /// Simulated seconds; a multiple of the base step.
        #[arg(long)]
        duration: u64,
        /// Run despite validation errors.
        #[arg(long)]
        force: bool,
    },
    /// Run a predefined query.
    Query { name: String, args: Vec<String> },
    /// Write component meta descriptions (out-dir/<id>.meta.json).
    ExportMeta {
        /// Component ids; all when omitted.
        components: Vec<String>,
    },
}

#[derive(Debug)]
struct Failure {
    status: i32,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        status: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = Result<i32, Failure>;

struct Context<'w> {
    inputs: Inputs,
    color: bool,
    out: &'w mut dyn Write,
    store: Option<Store>,
}

/// Runs the command line and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    let color = std::env::var_os("COPLAN_NO_COLOR").is_none() && std::io::stdout().is_terminal();
    let mut ctx = Context {
        inputs: cli.inputs,
        color,
        out,
        store: None,
    };
    let result = match cli.command {
        Command::Ingest { paths } => ingest(&mut ctx, &paths),
        Command::Recommend {
            attribute,
            w_unit,
            w_topic,
            w_range,
        } => recommend(&mut ctx, &attribute, w_unit, w_topic, w_range),
        Command::Validate => validate(&mut ctx),
        Command::Autofix => autofix(&mut ctx),
        Command::Run { duration, force } => execute(&mut ctx, duration, force),
        Command::Query { name, args } => query(&mut ctx, &name, &args),
        Command::ExportMeta { components } => export_meta(&mut ctx, &components),
    };
    match result {
        Ok(status) => status,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.status
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

impl Context<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn paint(&self, text: &str, ansi: &str) -> String {
        if self.color {
            format!("\x1b[{ansi}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn units(&self) -> &'static UnitTable {
        UnitTable::builtin()
    }

    fn store(&mut self) -> Result<Option<&Store>, Failure> {
        if self.store.is_none() {
            if let Some(path) = &self.inputs.store {
                let text = read(path)?;
                let store = triple_store::parse(&text)
                    .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
                self.store = Some(store);
            }
        }
        Ok(self.store.as_ref())
    }

    fn catalog(&mut self) -> Result<Catalog, Failure> {
        if let Some(path) = self.inputs.catalog.clone() {
            return Catalog::parse(&read(&path)?, self.units())
                .map_err(|e| input_error(format!("{}: {e}", path.display())));
        }
        let units = self.units();
        match self.store()? {
            Some(s) => {
                Catalog::from_triples(s, units).map_err(|e| input_error(format!("store: {e}")))
            }
            None => Err(input_error("no catalog given (use --catalog or --store)")),
        }
    }

    fn model(&mut self) -> Result<Option<InfoModel>, Failure> {
        if let Some(path) = self.inputs.info_model.clone() {
            return InfoModel::parse(&read(&path)?, self.units())
                .map(Some)
                .map_err(|e| input_error(format!("{}: {e}", path.display())));
        }
        let units = self.units();
        match self.store()? {
            Some(s) => {
                let m = InfoModel::from_triples(s, units)
                    .map_err(|e| input_error(format!("store: {e}")))?;
                Ok((!m.is_empty()).then_some(m))
            }
            None => Ok(None),
        }
    }

    fn require_model(&mut self) -> Result<InfoModel, Failure> {
        self.model()?
            .ok_or_else(|| input_error("no information model given (use --info-model or --store)"))
    }

    fn taxonomy(&mut self) -> Result<Taxonomy, Failure> {
        if let Some(path) = self.inputs.taxonomy.clone() {
            return Taxonomy::parse(&read(&path)?)
                .map_err(|e| input_error(format!("{}: {e}", path.display())));
        }
        match self.store()? {
            Some(s) => Taxonomy::from_triples(s).map_err(|e| input_error(format!("store: {e}"))),
            None => Ok(Taxonomy::new()),
        }
    }

    /// The scenario and the directory its relative paths resolve against.
    fn scenario(&mut self, catalog: &Catalog) -> Result<(Scenario, PathBuf), Failure> {
        if let Some(path) = self.inputs.scenario.clone() {
            let s = Scenario::parse(&read(&path)?, catalog)
                .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            return Ok((s, dir));
        }
        match self.store()? {
            Some(st) => Scenario::from_triples(st, catalog)
                .map(|s| (s, PathBuf::from(".")))
                .map_err(|e| input_error(format!("store: {e}"))),
            None => Err(input_error("no scenario given (use --scenario or --store)")),
        }
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.inputs.out_dir.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SourceKind {
    Catalog,
    Model,
    Scenario,
    Taxonomy,
}

fn sniff(text: &str) -> SourceKind {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .and_then(|l| l.split_whitespace().next())
        .unwrap_or("");
    match first {
        "component" => SourceKind::Catalog,
        "domain" | "evaluation" | "transform" => SourceKind::Model,
        "scenario" | "simulator" | "entity" | "connect" => SourceKind::Scenario,
        _ => SourceKind::Taxonomy,
    }
}

fn ingest(ctx: &mut Context, paths: &[PathBuf]) -> Outcome {
    let mut sources: Vec<(SourceKind, PathBuf, String)> = Vec::new();
    let flagged = [
        (SourceKind::Catalog, &ctx.inputs.catalog),
        (SourceKind::Model, &ctx.inputs.info_model),
        (SourceKind::Scenario, &ctx.inputs.scenario),
        (SourceKind::Taxonomy, &ctx.inputs.taxonomy),
    ];
    for (kind, p) in flagged {
        if let Some(p) = p {
            sources.push((kind, p.clone(), read(p)?));
        }
    }
    for p in paths {
        let text = read(p)?;
        sources.push((sniff(&text), p.clone(), text));
    }
    if sources.is_empty() {
        return Err(input_error("nothing to ingest"));
    }
    let one = |kind: SourceKind| -> Result<Option<&(SourceKind, PathBuf, String)>, Failure> {
        let mut it = sources.iter().filter(|s| s.0 == kind);
        let first = it.next();
        match it.next() {
            Some(second) => Err(input_error(format!(
                "{} and {} are both {kind:?} sources",
                first.expect("two found").1.display(),
                second.1.display()
            ))),
            None => Ok(first),
        }
    };
    let units = ctx.units();
    let fail = |p: &Path, e: &dyn std::fmt::Display| input_error(format!("{}: {e}", p.display()));
    let mut triples = Vec::new();
    let mut catalog = None;
    if let Some((_, p, text)) = one(SourceKind::Catalog)? {
        let c = Catalog::parse(text, units).map_err(|e| fail(p, &e))?;
        triples.extend(c.to_triples());
        catalog = Some(c);
    }
    if let Some((_, p, text)) = one(SourceKind::Model)? {
        triples.extend(
            InfoModel::parse(text, units)
                .map_err(|e| fail(p, &e))?
                .to_triples(),
        );
    }
    if let Some((_, p, text)) = one(SourceKind::Taxonomy)? {
        triples.extend(Taxonomy::parse(text).map_err(|e| fail(p, &e))?.to_triples());
    }
    if let Some((_, p, text)) = one(SourceKind::Scenario)? {
        let c = catalog.as_ref().ok_or_else(|| {
            input_error(format!(
                "{}: a scenario needs a catalog among the inputs",
                p.display()
            ))
        })?;
        triples.extend(
            Scenario::parse(text, c)
                .map_err(|e| fail(p, &e))?
                .to_triples(),
        );
    }
    let store: Store = triples.into_iter().collect();
    let path = ctx.out_path("store.nt");
    write_file(&path, &triple_store::serialize(&store))?;
    ctx.say(format!(
        "{} triples written to {}",
        store.len(),
        path.display()
    ));
    Ok(EXIT_OK)
}

fn recommend(ctx: &mut Context, attribute: &str, wu: f64, wt: f64, wr: f64) -> Outcome {
    let weights = Weights::new(wu, wt, wr).map_err(|e| input_error(e.to_string()))?;
    let model = ctx.require_model()?;
    let taxonomy = ctx.taxonomy()?;
    let r = AttributeRef::parse(attribute).ok_or_else(|| {
        input_error(format!(
            "attribute {attribute:?} is not of the form object.attribute"
        ))
    })?;
    let request =
        MatchRequest::for_attribute(&model, &r, weights).map_err(|e| input_error(e.to_string()))?;
    let recs = if ctx.inputs.catalog.is_none() && ctx.inputs.store.is_some() {
        let units = ctx.units();
        let store = ctx.store()?.expect("store flag given");
        recommender::recommend_from_store(&request, &model, store, units, &taxonomy)
    } else {
        let catalog = ctx.catalog()?;
        recommender::recommend(&request, &model, &catalog, &taxonomy)
    }
    .map_err(|e| input_error(e.to_string()))?;

    let header = format!(
        "{:>6}  {:<28} {:>5} {:>5} {:>5}  {}",
        "score", "candidate", "unit", "topic", "range", "conversion"
    );
    ctx.say(ctx.paint(&header, "1"));
    for rec in &recs {
        let line = format!(
            "{:>6.3}  {:<28} {:>5} {:>5} {:>5}  {}",
            rec.score,
            format!("{}.{}", rec.component, rec.variable),
            rec.parts.unit,
            rec.parts.topic,
            rec.parts.range,
            rec.conversion
                .map(|c| format!("x{c}"))
                .unwrap_or_else(|| "-".into())
        );
        ctx.say(line);
    }
    if recs.is_empty() {
        ctx.say("no candidates");
    } else {
        let best: Vec<String> = recommender::component_scores(&recs)
            .into_iter()
            .map(|(c, s)| format!("{c} {}", vocab::format_number(s)))
            .collect();
        ctx.say(format!("components: {}", best.join(", ")));
    }
    let report: String = recs.iter().map(|r| r.report_line() + "\n").collect();
    let path = ctx.out_path("recommendations.csv");
    write_file(&path, &report)?;
    Ok(EXIT_OK)
}

fn validate(ctx: &mut Context) -> Outcome {
    let catalog = ctx.catalog()?;
    let (scenario, _) = ctx.scenario(&catalog)?;
    let model = ctx.model()?;
    let taxonomy = ctx.taxonomy()?;
    let report = validator::validate(&scenario, &catalog, model.as_ref(), Some(&taxonomy));
    for f in &report.findings {
        let label = match f.severity {
            Severity::Error => ctx.paint(&format!("error[{}]", f.code), "31"),
            Severity::Warning => ctx.paint(&format!("warning[{}]", f.code), "33"),
            Severity::Info => format!("info[{}]", f.code),
        };
        ctx.say(format!("{label} {}: {}", f.location, f.message));
    }
    let verdict = if report.passed {
        ctx.paint("passed", "32")
    } else {
        ctx.paint("failed", "31")
    };
    ctx.say(format!("{verdict} ({} finding(s))", report.findings.len()));
    write_file(&ctx.out_path("validation.txt"), &report.to_lines())?;
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

fn autofix(ctx: &mut Context) -> Outcome {
    let catalog = ctx.catalog()?;
    let (scenario, _) = ctx.scenario(&catalog)?;
    let fixed = validator::autofix_units(&scenario, &catalog);
    let changed: Vec<_> = fixed
        .connections
        .iter()
        .zip(&scenario.connections)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a)
        .collect();
    for c in &changed {
        ctx.say(format!(
            "{}: transform {} inserted",
            c.label(),
            c.transform.expect("autofix sets transforms")
        ));
    }
    let path = ctx.out_path("autofixed.scenario");
    write_file(&path, &fixed.to_text())?;
    ctx.say(format!(
        "{} transform(s) inserted; scenario written to {}",
        changed.len(),
        path.display()
    ));
    Ok(EXIT_OK)
}

fn execute(ctx: &mut Context, duration: u64, force: bool) -> Outcome {
    let catalog = ctx.catalog()?;
    let (scenario, base_dir) = ctx.scenario(&catalog)?;
    let model = ctx.model()?;
    let options = RunOptions {
        duration_s: duration,
        force,
        base_dir,
    };
    let result =
        kernel::run(&scenario, &catalog, &options, model.as_ref()).map_err(|e| Failure {
            status: match e {
                KernelError::Validation(_) => EXIT_FAILED,
                _ => EXIT_USAGE,
            },
            message: e.to_string(),
        })?;
    let samples = ctx.out_path("samples.csv");
    write_file(&samples, &result.to_csv())?;
    let mut criteria = String::new();
    for (name, v) in &result.criteria {
        let unit = model
            .as_ref()
            .and_then(|m| m.criterion(name))
            .map(|c| c.unit.symbol.clone())
            .unwrap_or_default();
        let _ = writeln!(criteria, "{name} {} {unit}", vocab::format_number(*v));
    }
    write_file(&ctx.out_path("criteria.txt"), &criteria)?;
    let store: Store = kernel::results_to_triples(&result).into_iter().collect();
    write_file(
        &ctx.out_path("results.nt"),
        &triple_store::serialize(&store),
    )?;
    ctx.say(format!(
        "{} samples over {duration} s written to {}",
        result.samples.len(),
        ctx.inputs.out_dir.display()
    ));
    for line in criteria.lines() {
        ctx.say(format!("  {line}"));
    }
    Ok(EXIT_OK)
}

fn pattern(s: PatternTerm, p: &str, o: PatternTerm) -> TriplePattern {
    TriplePattern::new(s, PatternTerm::Const(Term::Iri(p.to_string())), o)
        .expect("distinct variables")
}

fn class_term(c: &str) -> PatternTerm {
    PatternTerm::Const(Term::Iri(c.to_string()))
}

/// The store to query: `--store`, or one built from the given source files.
fn query_store(ctx: &mut Context) -> Result<Store, Failure> {
    if let Some(s) = ctx.store()? {
        return Ok(s.clone());
    }
    let mut triples = Vec::new();
    if ctx.inputs.catalog.is_some() {
        triples.extend(ctx.catalog()?.to_triples());
    }
    if let Some(m) = ctx.model()? {
        triples.extend(m.to_triples());
    }
    if ctx.inputs.taxonomy.is_some() {
        triples.extend(ctx.taxonomy()?.to_triples());
    }
    if triples.is_empty() {
        return Err(input_error("no inputs given (use --store or source files)"));
    }
    Ok(triples.into_iter().collect())
}

fn query(ctx: &mut Context, name: &str, args: &[String]) -> Outcome {
    let arg = |n: usize, what: &str| -> Result<&str, Failure> {
        match args {
            [a] if n == 1 => Ok(a.as_str()),
            _ => Err(input_error(format!(
                "query {name} takes exactly one argument: {what}"
            ))),
        }
    };
    let v = PatternTerm::var;
    match name {
        "components-by-domain" => {
            let term = arg(1, "<domain-term>")?;
            let store = query_store(ctx)?;
            let r = store.query(&[
                pattern(v("c"), RDF_TYPE, class_term(class::COMPONENT)),
                pattern(v("c"), pred::HAS_DOMAIN, PatternTerm::literal(term)),
            ]);
            for b in &r.bindings {
                let id = vocab::unmint(Kind::Component, &b["c"])
                    .unwrap_or_else(|| b["c"].value().to_string());
                ctx.say(id);
            }
        }
        "attributes-without-candidate" => {
            if !args.is_empty() {
                return Err(input_error(
                    "query attributes-without-candidate takes no arguments",
                ));
            }
            let store = query_store(ctx)?;
            let units = ctx.units();
            let model = InfoModel::from_triples(&store, units)
                .map_err(|e| input_error(format!("store: {e}")))?;
            let taxonomy =
                Taxonomy::from_triples(&store).map_err(|e| input_error(format!("store: {e}")))?;
            let attrs = store.query(&[pattern(v("a"), RDF_TYPE, class_term(class::ATTRIBUTE))]);
            for b in &attrs.bindings {
                let Some(name) = vocab::unmint(Kind::Attribute, &b["a"]) else {
                    continue;
                };
                let r = AttributeRef::parse(&name)
                    .ok_or_else(|| input_error(format!("bad attribute iri {name}")))?;
                let request = MatchRequest::for_attribute(&model, &r, Weights::default())
                    .map_err(|e| input_error(e.to_string()))?;
                let recs =
                    recommender::recommend_from_store(&request, &model, &store, units, &taxonomy)
                        .map_err(|e| input_error(e.to_string()))?;
                if recs.is_empty() {
                    ctx.say(name);
                }
            }
        }
        "criteria-with-sources" => {
            if !args.is_empty() {
                return Err(input_error(
                    "query criteria-with-sources takes no arguments",
                ));
            }
            let store = query_store(ctx)?;
            let r = store.query(&[
                pattern(v("t"), pred::TRANSFORM_OUTPUT, v("criterion")),
                pattern(v("t"), pred::TRANSFORM_INPUT, v("attribute")),
            ]);
            for b in &r.bindings {
                let crit = vocab::unmint(Kind::Criterion, &b["criterion"]).unwrap_or_default();
                let attr = vocab::unmint(Kind::Attribute, &b["attribute"]).unwrap_or_default();
                let t = vocab::unmint(Kind::Transform, &b["t"]).unwrap_or_default();
                ctx.say(format!("{crit} <- {attr} via {t}"));
            }
        }
        "variables-by-dimension" => {
            let expr = arg(1, "<unit-expression>")?;
            let wanted = ctx
                .units()
                .parse(expr)
                .map_err(|e| input_error(e.to_string()))?;
            let store = query_store(ctx)?;
            let r = store.query(&[
                pattern(v("c"), pred::HAS_VARIABLE, v("v")),
                pattern(v("v"), pred::HAS_UNIT, v("unit")),
            ]);
            let units = ctx.units();
            for b in &r.bindings {
                let Ok(u) = units.parse(b["unit"].value()) else {
                    continue;
                };
                if units::same_dimension(&u, &wanted) {
                    let var = vocab::unmint(Kind::Variable, &b["v"]).unwrap_or_default();
                    ctx.say(format!("{var} {}", u.symbol));
                }
            }
        }
        other => {
            return Err(input_error(format!(
                "unknown query {other:?}; available: {}",
                QUERIES.join(", ")
            )))
        }
    }
    Ok(EXIT_OK)
}

fn export_meta(ctx: &mut Context, ids: &[String]) -> Outcome {
    let catalog = ctx.catalog()?;
    let selected: Vec<_> = if ids.is_empty() {
        catalog.components.iter().collect()
    } else {
        ids.iter()
            .map(|id| {
                catalog
                    .component(id)
                    .ok_or_else(|| input_error(format!("unknown component {id:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    for c in selected {
        let path = ctx.out_path(&format!("{}.meta.json", c.id));
        write_file(&path, &catalog::export_meta(c))?;
        ctx.say(path.display().to_string());
    }
    Ok(EXIT_OK)
}
