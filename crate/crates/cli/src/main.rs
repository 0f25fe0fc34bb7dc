use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ban_router_core::bench::{parse_reports_csv, reports_csv, run_benchmark, Aggregate};
use ban_router_core::ch::ContractionHierarchy;
use ban_router_core::export::{profile_csv, solution_csv, solution_geojson, solution_json, solution_table, ttf_csv};
use ban_router_core::format::{parse_instance, parse_queries, write_instance, write_query};
use ban_router_core::generators::{
    exponential_gadget, partition_gadget, random_instance, rank_queries, region_queries, BanPattern, GadgetLayout,
    RandomParams,
};
use ban_router_core::oracle::{first_divergence, oracle_solve_limited, DEFAULT_STATE_LIMIT};
use ban_router_core::potentials::PotentialSource;
use ban_router_core::travel_time::TravelTimeFunction;
use ban_router_core::{CostParams, Error, Query, RoadInstance, Search, SearchOptions};

#[derive(Parser)]
#[command(name = "ban-router", version, about = "Cost-optimal truck routes under temporary driving bans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an instance and print a summary
    Validate { instance: PathBuf },
    /// Compute all Pareto-optimal routes for one or more queries
    Query {
        instance: PathBuf,
        #[command(flatten)]
        queries: QueryInput,
        #[command(flatten)]
        search: SearchFlags,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Solve queries with the time-expanded reference solver
    Oracle {
        instance: PathBuf,
        #[command(flatten)]
        queries: QueryInput,
        #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
        state_limit: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Compare search and reference solver; exit 0 iff all Pareto sets agree
    Verify {
        instance: PathBuf,
        #[command(flatten)]
        queries: QueryInput,
        #[command(flatten)]
        search: SearchFlags,
        #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
        state_limit: u64,
    },
    /// Generate instances and query sets
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run a batch of queries and report statistics
    Bench {
        instance: PathBuf,
        #[command(flatten)]
        queries: QueryInput,
        #[command(flatten)]
        search: SearchFlags,
        /// Worker threads, 0 for one per core
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Also write the per-query CSV here
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Aggregate table from a per-query CSV written by `bench`
    Summarize { reports: PathBuf },
    /// Dump the travel-time function of an edge
    Ttf {
        instance: PathBuf,
        #[arg(long)]
        edge: usize,
        #[arg(long, default_value_t = 0)]
        t_min: i64,
        #[arg(long)]
        t_max: i64,
    },
    /// Dump the cost profile of a vertex after a search
    Profile {
        instance: PathBuf,
        #[command(flatten)]
        queries: QueryInput,
        #[command(flatten)]
        search: SearchFlags,
        #[arg(long)]
        vertex: usize,
    },
    /// Build a contraction hierarchy and store it
    ChBuild {
        instance: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Reduction gadget from a list of positive numbers
    Partition {
        #[arg(long, value_delimiter = ',', required = true)]
        numbers: Vec<i64>,
        #[command(flatten)]
        gadget: GadgetFlags,
    },
    /// Gadget with exponentially many optimal routes
    Exponential {
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        gadget: GadgetFlags,
    },
    /// Random grid-like road graph
    Random {
        #[arg(long, default_value_t = 100)]
        vertices: usize,
        #[arg(long, default_value_t = 300)]
        edges: usize,
        #[arg(long, default_value_t = 0.1)]
        ban_density: f64,
        #[arg(long, value_enum, default_value_t = Pattern::Single)]
        pattern: Pattern,
        #[arg(long, default_value_t = 2)]
        max_bans_per_edge: usize,
        #[arg(long, default_value_t = 20)]
        max_ban_length: i64,
        #[arg(long, default_value_t = 1440)]
        period: i64,
        #[arg(long, default_value_t = 1320)]
        night_start: i64,
        #[arg(long, default_value_t = 360)]
        night_length: i64,
        /// Central share of the grid that receives nightly bans
        #[arg(long, default_value_t = 0.6)]
        region: f64,
        #[arg(long)]
        max_total_bans: Option<usize>,
        #[arg(long, default_value_t = 400)]
        horizon: i64,
        #[arg(long, default_value_t = 5.0)]
        time_per_unit: f64,
        /// Driving cost followed by waiting costs per rating
        #[arg(long, value_delimiter = ',', default_values_t = [14, 14, 7, 6, 5, 4, 3])]
        costs: Vec<i64>,
        /// Relative weight of each rating
        #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.04, 0.04, 0.04, 0.04, 0.04])]
        rating_mix: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Query sets by Dijkstra rank or between two regions
    Queries {
        instance: PathBuf,
        #[arg(long, default_value_t = 10)]
        sources: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [8])]
        ranks: Vec<u32>,
        /// `lat_min,lon_min,lat_max,lon_max`; with --to, draws pairs between regions
        #[arg(long, value_delimiter = ',', num_args = 4)]
        from: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 4)]
        to: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        t_min: i64,
        #[arg(long)]
        t_max: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GadgetFlags {
    #[arg(long, short = 'd', default_value_t = 2)]
    driving: i64,
    #[arg(long, default_value_t = 1)]
    c0: i64,
    #[arg(long, value_enum, default_value_t = Layout::Simple)]
    layout: Layout,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Where to write the query line
    #[arg(long)]
    query_out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryInput {
    /// Inline query `s z t_min t_max [source_wait_cost]`
    #[arg(long, short, conflicts_with = "queries")]
    query: Option<String>,
    /// File with `query` lines
    #[arg(long)]
    queries: Option<PathBuf>,
}

#[derive(Args)]
struct SearchFlags {
    #[arg(long)]
    no_astar: bool,
    #[arg(long)]
    no_prune_target: bool,
    #[arg(long)]
    no_prune_bounds: bool,
    #[arg(long)]
    no_prune_parent: bool,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    iteration_cap: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    piece_cap: Option<u64>,
    #[arg(long)]
    check_piece_bounds: bool,
    /// Hierarchy file from `ch-build` for the potentials
    #[arg(long)]
    ch: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Geojson,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    Simple,
    Parallel,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    Single,
    Nightly,
}

impl SearchFlags {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            astar: !self.no_astar,
            prune_target: !self.no_prune_target,
            prune_bounds: !self.no_prune_bounds,
            prune_parent: !self.no_prune_parent,
            iteration_cap: self.iteration_cap,
            piece_cap: self.piece_cap.map(|c| c as usize),
            check_piece_bounds: self.check_piece_bounds,
        }
    }

    fn hierarchy(&self, instance: &RoadInstance) -> anyhow::Result<Option<ContractionHierarchy>> {
        self.ch
            .as_ref()
            .map(|path| ContractionHierarchy::load(path, instance).with_context(|| format!("loading {}", path.display())))
            .transpose()
    }
}

impl QueryInput {
    fn load(&self) -> anyhow::Result<Vec<Query>> {
        match (&self.query, &self.queries) {
            (Some(inline), _) => Ok(parse_queries(&format!("query {inline}"))?),
            (None, Some(path)) => Ok(parse_queries(&read(path)?)?),
            (None, None) => Err(Error::InvalidArgument("give --query or --queries".into()).into()),
        }
    }
}

impl From<Layout> for GadgetLayout {
    fn from(layout: Layout) -> Self {
        match layout {
            Layout::Simple => GadgetLayout::Simple,
            Layout::Parallel => GadgetLayout::Parallel,
        }
    }
}

struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::fmt::Debug for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

impl std::error::Error for Mismatch {}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> anyhow::Result<RoadInstance> {
    let text = read(path)?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json_list(values: Vec<serde_json::Value>) -> serde_json::Value {
    if values.len() == 1 {
        values.into_iter().next().unwrap()
    } else {
        serde_json::Value::Array(values)
    }
}

fn cmd_query(instance: &Path, queries: &QueryInput, search: &SearchFlags, format: Format) -> anyhow::Result<()> {
    let inst = load_instance(instance)?;
    let queries = queries.load()?;
    let ch = search.hierarchy(&inst)?;
    let source = ch.as_ref().map_or(PotentialSource::Dijkstra, PotentialSource::Hierarchy);
    let mut values = Vec::new();
    let mut text = String::new();
    for (i, q) in queries.iter().enumerate() {
        let sol = ban_router_core::search::run_query_with(&inst, q, search.options(), source)?;
        log::info!("query {i}: {} routes, {} pops", sol.pairs.len(), sol.stats.pops);
        match format {
            Format::Json => values.push(solution_json(&inst, q, &sol)?),
            Format::Geojson => values.push(solution_geojson(&inst, &sol)?),
            Format::Csv | Format::Table => {
                if queries.len() > 1 {
                    text.push_str(&format!("# {}", write_query(q)));
                }
                text.push_str(&if format == Format::Csv { solution_csv(&sol) } else { solution_table(&sol) });
            }
        }
    }
    if !values.is_empty() {
        text = serde_json::to_string_pretty(&json_list(values))? + "\n";
    }
    emit(None, &text)
}

fn cmd_oracle(instance: &Path, queries: &QueryInput, limit: u64, format: Format) -> anyhow::Result<()> {
    let inst = load_instance(instance)?;
    let mut values = Vec::new();
    let mut text = String::new();
    for q in queries.load()? {
        let sol = oracle_solve_limited(&inst, &q, limit)?;
        match format {
            Format::Json => {
                let routes = sol
                    .pairs
                    .iter()
                    .map(|&(t, _)| sol.route(&inst, &q, t))
                    .collect::<Result<Vec<_>, _>>()?;
                values.push(json!({"query": q, "pairs": sol.pairs, "routes": routes}));
            }
            Format::Csv | Format::Table => {
                text.push_str("arrival,cost\n");
                for (t, c) in &sol.pairs {
                    text.push_str(&format!("{t},{c}\n"));
                }
            }
            Format::Geojson => bail!(Error::InvalidArgument("oracle output has no geojson form".into())),
        }
    }
    if !values.is_empty() {
        text = serde_json::to_string_pretty(&json_list(values))? + "\n";
    }
    emit(None, &text)
}

fn cmd_verify(instance: &Path, queries: &QueryInput, search: &SearchFlags, limit: u64) -> anyhow::Result<()> {
    let inst = load_instance(instance)?;
    let ch = search.hierarchy(&inst)?;
    let source = ch.as_ref().map_or(PotentialSource::Dijkstra, PotentialSource::Hierarchy);
    let queries = queries.load()?;
    for (i, q) in queries.iter().enumerate() {
        let oracle = oracle_solve_limited(&inst, q, limit)?;
        let sol = ban_router_core::search::run_query_with(&inst, q, search.options(), source)?;
        if let Some((k, ours, theirs)) = first_divergence(&sol.pairs, &oracle.pairs) {
            return Err(Mismatch(format!(
                "query {i} ({}): first divergence at entry {k}: search {ours:?}, oracle {theirs:?}",
                write_query(q).trim_end(),
            ))
            .into());
        }
    }
    println!("ok: {} queries agree", queries.len());
    Ok(())
}

fn write_gadget(instance: &RoadInstance, query: &Query, notes: &str, flags: &GadgetFlags) -> anyhow::Result<()> {
    let text = format!("{}# {}# {notes}\n", write_instance(instance), write_query(query));
    emit(flags.out.as_deref(), &text)?;
    if let Some(path) = &flags.query_out {
        fs::write(path, write_query(query)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cost_params(values: &[i64]) -> anyhow::Result<CostParams> {
    match values {
        [d, waiting @ ..] if !waiting.is_empty() => Ok(CostParams::new(*d, waiting.to_vec())?),
        _ => Err(Error::InvalidArgument("--costs needs a driving cost and at least one waiting cost".into()).into()),
    }
}

fn region(values: &[f64]) -> (f64, f64, f64, f64) {
    (values[0], values[1], values[2], values[3])
}

fn cmd_gen(what: &GenCommand) -> anyhow::Result<()> {
    match what {
        GenCommand::Partition { numbers, gadget } => {
            let costs = CostParams::new(gadget.driving, vec![gadget.c0])?;
            let g = partition_gadget(numbers, costs, gadget.layout.into())?;
            write_gadget(&g.instance, &g.query, &format!("threshold {}", g.threshold), gadget)
        }
        GenCommand::Exponential { k, gadget } => {
            let costs = CostParams::new(gadget.driving, vec![gadget.c0])?;
            let g = exponential_gadget(*k, costs, gadget.layout.into())?;
            write_gadget(&g.instance, &g.query, &format!("x {} routes {}", g.x, 1u64 << k), gadget)
        }
        GenCommand::Random {
            vertices,
            edges,
            ban_density,
            pattern,
            max_bans_per_edge,
            max_ban_length,
            period,
            night_start,
            night_length,
            region,
            max_total_bans,
            horizon,
            time_per_unit,
            costs,
            rating_mix,
            seed,
            out,
        } => {
            let costs = cost_params(costs)?;
            let mut mix = rating_mix.clone();
            mix.resize(costs.waiting.len(), 0.0);
            let params = RandomParams {
                vertices: *vertices,
                edges: *edges,
                ban_density: *ban_density,
                ban_pattern: match pattern {
                    Pattern::Single => BanPattern::SingleClosures {
                        max_per_edge: *max_bans_per_edge,
                        max_len: *max_ban_length,
                    },
                    Pattern::Nightly => BanPattern::Nightly {
                        period: *period,
                        start: *night_start,
                        length: *night_length,
                        region: *region,
                    },
                },
                max_total_bans: *max_total_bans,
                rating_mix: mix,
                horizon: *horizon,
                time_per_unit: *time_per_unit,
                costs,
            };
            let inst = random_instance(*seed, &params)?;
            emit(out.as_deref(), &write_instance(&inst))
        }
        GenCommand::Queries {
            instance,
            sources,
            ranks,
            from,
            to,
            t_min,
            t_max,
            seed,
            out,
        } => {
            let inst = load_instance(instance)?;
            let mut text = String::new();
            match (from, to) {
                (Some(a), Some(b)) => {
                    for q in region_queries(&inst, *seed, *sources, region(a), region(b), *t_min, *t_max)? {
                        text.push_str(&write_query(&q));
                    }
                }
                (None, None) => {
                    let (queries, skipped) = rank_queries(&inst, *seed, *sources, ranks, *t_min, *t_max);
                    if skipped > 0 {
                        log::warn!("{skipped} rank queries skipped");
                    }
                    for r in queries {
                        text.push_str(&format!("# rank {}\n{}", r.rank, write_query(&r.query)));
                    }
                }
                _ => bail!(Error::InvalidArgument("--from and --to go together".into())),
            }
            emit(out.as_deref(), &text)
        }
    }
}

fn cmd_bench(
    instance: &Path,
    queries: &QueryInput,
    search: &SearchFlags,
    threads: usize,
    format: Format,
    csv_out: Option<&Path>,
) -> anyhow::Result<()> {
    let inst = load_instance(instance)?;
    let ch = search.hierarchy(&inst)?;
    let source = ch.as_ref().map_or(PotentialSource::Dijkstra, PotentialSource::Hierarchy);
    // rank comments preceding a query line carry over into the reports
    let mut ranked = Vec::new();
    match (&queries.queries, &queries.query) {
        (Some(path), None) => {
            let mut rank = None;
            for line in read(path)?.lines() {
                if let Some(r) = line.trim().strip_prefix("# rank ") {
                    rank = r.trim().parse().ok();
                } else if line.trim_start().starts_with("query") {
                    ranked.push((parse_queries(line)?.remove(0), rank.take()));
                }
            }
        }
        _ => ranked = queries.load()?.into_iter().map(|q| (q, None)).collect(),
    }
    let report = run_benchmark(&inst, &ranked, search.options(), source, threads)?;
    let csv = reports_csv(&report.reports);
    if let Some(path) = csv_out {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    let text = match format {
        Format::Table => {
            let opts = report.options;
            format!(
                "a*={} prune-target={} prune-bounds={} prune-parent={} hierarchy={}\n{}",
                opts.astar,
                opts.prune_target,
                opts.prune_bounds,
                opts.prune_parent,
                report.hierarchy,
                report.aggregate.table()
            )
        }
        Format::Csv => csv,
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Geojson => bail!(Error::InvalidArgument("bench output has no geojson form".into())),
    };
    emit(None, &text)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Validate { instance } => {
            let inst = load_instance(instance)?;
            let costs = inst.costs();
            println!(
                "vertices {}\nedges {}\nbans {}\nratings {}\ndriving cost {}\nwaiting costs {:?}\nmode {}",
                inst.vertex_count(),
                inst.edge_count(),
                inst.ban_count(),
                inst.max_rating(),
                costs.driving,
                costs.waiting,
                if costs.tractable() { "tractable" } else { "research" }
            );
            Ok(())
        }
        Command::Query {
            instance,
            queries,
            search,
            format,
        } => cmd_query(instance, queries, search, *format),
        Command::Oracle {
            instance,
            queries,
            state_limit,
            format,
        } => cmd_oracle(instance, queries, *state_limit, *format),
        Command::Verify {
            instance,
            queries,
            search,
            state_limit,
        } => cmd_verify(instance, queries, search, *state_limit),
        Command::Gen { what } => cmd_gen(what),
        Command::Bench {
            instance,
            queries,
            search,
            threads,
            format,
            csv_out,
        } => cmd_bench(instance, queries, search, *threads, *format, csv_out.as_deref()),
        Command::Summarize { reports } => {
            let reports = parse_reports_csv(&read(reports)?)?;
            print!("{}", Aggregate::from_reports(&reports).table());
            Ok(())
        }
        Command::Ttf {
            instance,
            edge,
            t_min,
            t_max,
        } => {
            let inst = load_instance(instance)?;
            if *edge >= inst.edge_count() {
                bail!(Error::UnknownEdge(*edge));
            }
            if t_min >= t_max {
                bail!(Error::InvalidArgument("t_min must be below t_max".into()));
            }
            let ttf = TravelTimeFunction::build(*edge, inst.edge(*edge), *t_min, *t_max);
            emit(None, &ttf_csv(&ttf))
        }
        Command::Profile {
            instance,
            queries,
            search,
            vertex,
        } => {
            let inst = load_instance(instance)?;
            inst.check_vertex(*vertex)?;
            let ch = search.hierarchy(&inst)?;
            let source = ch.as_ref().map_or(PotentialSource::Dijkstra, PotentialSource::Hierarchy);
            let q = queries
                .load()?
                .into_iter()
                .next()
                .ok_or_else(|| anyhow!(Error::InvalidArgument("no query given".into())))?;
            let mut s = Search::with_source(&inst, q, search.options(), source)?;
            s.run()?;
            emit(None, &profile_csv(s.profile(*vertex)))
        }
        Command::ChBuild { instance, out } => {
            let inst = load_instance(instance)?;
            let ch = ContractionHierarchy::build(&inst);
            ch.save(out)?;
            println!("{} vertices, {} shortcuts", ch.vertex_count(), ch.shortcut_count());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Mismatch>().is_some() {
        return 6;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Parse { .. }) | Some(Error::CorruptCache(_)) => 2,
        Some(Error::CapExceeded { .. }) => 4,
        Some(Error::OracleTooLarge { .. }) => 5,
        Some(Error::Io(_)) | None => 1,
        Some(_) => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BAN_ROUTER_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
