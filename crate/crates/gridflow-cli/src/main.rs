use clap::{Args, Parser, Subcommand};
use gridflow::gen;
use gridflow::graph::{GraphTopology, VolumeDims};
use gridflow::io::{self, LoadedInput};
use gridflow::report::{self, RunReport};
use gridflow::surface;
use gridflow::verify::{self, Backend, SolveOptions};
use gridflow::{cut, oracle, Error};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_VERIFY_FAILED: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gridflow",
    about = "s-t maxflow/mincut for structured multi-column volume graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a report row
    Solve(SolveArgs),
    /// Generate a deterministic instance file
    Gen(GenArgs),
    /// Run several backends and check every flow invariant
    Verify(VerifyArgs),
    /// Time one backend over a list of segment counts
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct CommonSolve {
    /// pr-serial | pr-parallel | bk-serial | bk-parallel | oracle
    #[arg(long, default_value = "pr-serial")]
    backend: String,
    /// Segment count for pr-parallel
    #[arg(long, default_value_t = 1)]
    segments: usize,
    /// Tiling for bk-parallel, e.g. 2x2
    #[arg(long, default_value = "2x1")]
    tiles: String,
    /// Global relabel factor (1..=2); picked by instance size when absent
    #[arg(long)]
    gr_factor: Option<f64>,
    /// Fixed-point scale for weight volumes
    #[arg(long, default_value_t = 1)]
    scale: i64,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[command(flatten)]
    common: CommonSolve,
    /// csv | json
    #[arg(long, default_value = "csv")]
    report: String,
    /// Also cross-check against the reference solver when small enough
    #[arg(long)]
    verify_with_oracle: bool,
}

#[derive(Args)]
struct GenArgs {
    output: PathBuf,
    /// RxCxS
    #[arg(long)]
    dims: String,
    #[arg(long = "edge-interval", default_value_t = 1)]
    edge_interval: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Maximum random capacity for flow instances
    #[arg(long, default_value_t = 20)]
    max_cap: u32,
    /// Generate a weight volume (POGW) instead of a flow instance
    #[arg(long)]
    weights: bool,
    /// Weight range for POGW generation
    #[arg(long, default_value_t = -9)]
    w_lo: i32,
    #[arg(long, default_value_t = 9)]
    w_hi: i32,
}

#[derive(Args)]
struct VerifyArgs {
    input: PathBuf,
    /// Comma-separated backend list; defaults to all of them
    #[arg(long)]
    backends: Option<String>,
    #[command(flatten)]
    common: CommonSolve,
    /// Include the reference solver when the instance is small enough
    #[arg(long, default_value_t = true)]
    verify_with_oracle: bool,
}

#[derive(Args)]
struct BenchArgs {
    input: PathBuf,
    #[command(flatten)]
    common: CommonSolve,
    /// Comma-separated segment counts, e.g. 1,2,4,8
    #[arg(long, default_value = "1,2,4,8")]
    segment_counts: String,
    #[arg(long, default_value_t = 1)]
    reps: u32,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn thread_cap() -> usize {
    std::env::var("GRIDFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(usize::MAX)
}

fn parse_tiles(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once('x').ok_or("tiles must look like CxS")?;
    let a = a.parse().map_err(|_| "bad tile count")?;
    let b = b.parse().map_err(|_| "bad tile count")?;
    Ok((a, b))
}

fn parse_dims(s: &str) -> Result<VolumeDims, String> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        return Err("dims must look like RxCxS".into());
    }
    let nums: Vec<u32> = parts
        .iter()
        .map(|p| p.parse::<u32>().map_err(|_| "bad dimension".to_string()))
        .collect::<Result<_, _>>()?;
    Ok(VolumeDims {
        rows: nums[0],
        columns: nums[1],
        slices: nums[2],
        edge_interval: 0,
    })
}

fn options_from(common: &CommonSolve) -> Result<SolveOptions, String> {
    Ok(SolveOptions {
        segments: common.segments,
        tiles: parse_tiles(&common.tiles)?,
        gr_factor: common.gr_factor,
        tick: 1000,
        jitter: 0,
        max_threads: thread_cap(),
    })
}

fn instance_name(path: &PathBuf) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Parse { .. } => EXIT_IO,
        _ => EXIT_VERIFY_FAILED,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err((msg, c)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(c)
        }
    }
}

type CmdResult = Result<u8, (String, u8)>;

fn io_err(e: Error) -> (String, u8) {
    let code = exit_for(&e);
    (e.to_string(), code)
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let backend = Backend::parse(&args.common.backend)
        .ok_or_else(|| (format!("unknown backend {}", args.common.backend), EXIT_IO))?;
    let opts = options_from(&args.common).map_err(|m| (m, EXIT_IO))?;
    let name = instance_name(&args.input);
    let input = io::load_path(&args.input).map_err(io_err)?;

    let report = match input {
        LoadedInput::Explicit(mut g) => {
            if backend != Backend::Oracle {
                return Err((
                    Error::BackendMismatch {
                        backend: backend.name().into(),
                        input: "DIMACS".into(),
                    }
                    .to_string(),
                    EXIT_VERIFY_FAILED,
                ));
            }
            let started = std::time::Instant::now();
            let flow = g.max_flow();
            let (_, cut_value) = g.min_cut().map_err(io_err)?;
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            if cut_value != flow {
                return Err(("cut does not equal flow".into(), EXIT_VERIFY_FAILED));
            }
            RunReport {
                instance: name,
                rows: 0,
                columns: 0,
                slices: 0,
                edge_interval: 0,
                backend: backend.name().into(),
                segments: 1,
                tiles: "1x1".into(),
                gr_factor: 0.0,
                rep: 0,
                wall_ms,
                flow,
                cut: cut_value,
                edge_storage_bytes: 0,
                offset_cache_entries: 0,
                mem_estimate_bytes: 0,
                baseline_edge_bytes: 0,
                baseline_node_bytes: 0,
            }
        }
        LoadedInput::Flow(inst) => {
            solve_structured(&name, &inst.topo, &inst.caps, backend, &opts, args.verify_with_oracle)?
        }
        LoadedInput::Weights(sw) => {
            let (inst, info) = surface::build_st_graph(&sw, args.common.scale).map_err(io_err)?;
            let report =
                solve_structured(&name, &inst.topo, &inst.caps, backend, &opts, args.verify_with_oracle)?;
            // surface summary on stderr so stdout stays machine-readable
            let mut caps = inst.caps.clone();
            let flow = verify::run_backend(
                if backend == Backend::Oracle { Backend::PrSerial } else { backend },
                &inst.topo,
                &mut caps,
                &opts,
            )
            .map_err(io_err)?;
            let cutr = cut::min_cut(&inst.topo, &inst.caps, &caps).map_err(io_err)?;
            let net = surface::extract_surface(&inst.topo, &cutr.source_side).map_err(io_err)?;
            eprintln!(
                "surface objective {} (scale {}), heights {:?}",
                info.objective_from_cut(flow),
                args.common.scale,
                net.heights
            );
            report
        }
    };

    match args.report.as_str() {
        "json" => println!("{}", report.to_json()),
        _ => {
            println!("{}", report::CSV_HEADER);
            println!("{}", report.csv_row());
        }
    }
    Ok(EXIT_OK)
}

fn solve_structured(
    name: &str,
    topo: &GraphTopology,
    caps: &gridflow::CapacityStore,
    backend: Backend,
    opts: &SolveOptions,
    verify_with_oracle: bool,
) -> Result<RunReport, (String, u8)> {
    let (report, _) =
        verify::solve_with_report(name, topo, caps, backend, opts, 0).map_err(io_err)?;
    if verify_with_oracle && topo.vertex_count() + 2 <= oracle::ORACLE_VERTEX_LIMIT {
        let expected = oracle::oracle_maxflow(topo, caps).map_err(io_err)?;
        if expected != report.flow {
            return Err((
                format!(
                    "value diverges from the reference solver: {} vs {}",
                    report.flow, expected
                ),
                EXIT_VERIFY_FAILED,
            ));
        }
    }
    Ok(report)
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let mut dims = parse_dims(&args.dims).map_err(|m| (m, EXIT_IO))?;
    dims.edge_interval = args.edge_interval;
    let dims = VolumeDims::new(dims.rows, dims.columns, dims.slices, dims.edge_interval)
        .map_err(io_err)?;
    let mut out: Vec<u8> = Vec::new();
    if args.weights {
        let sw = gen::generate_pogw(dims, args.seed, args.w_lo, args.w_hi).map_err(io_err)?;
        io::write_pogw(&mut out, &sw).map_err(io_err)?;
    } else {
        let inst = gen::generate_pogf(dims, args.seed, args.max_cap).map_err(io_err)?;
        io::write_pogf(&mut out, &inst.topo, &inst.caps).map_err(io_err)?;
    }
    std::fs::write(&args.output, out).map_err(|e| (e.to_string(), EXIT_IO))?;
    println!("wrote {}", args.output.display());
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let opts = options_from(&args.common).map_err(|m| (m, EXIT_IO))?;
    let input = io::load_path(&args.input).map_err(io_err)?;
    let mut backends = match &args.backends {
        None => verify::default_backends_for(&input),
        Some(list) => {
            let mut v = Vec::new();
            for item in list.split(',') {
                v.push(
                    Backend::parse(item.trim())
                        .ok_or_else(|| (format!("unknown backend {}", item), EXIT_IO))?,
                );
            }
            v
        }
    };
    if args.verify_with_oracle && !backends.contains(&Backend::Oracle) {
        backends.push(Backend::Oracle);
    }

    let report = match input {
        LoadedInput::Flow(inst) => {
            verify::verify_flow_instance(&inst.topo, &inst.caps, &backends, &opts)
        }
        LoadedInput::Weights(sw) => {
            verify::verify_weight_instance(&sw, args.common.scale, &backends, &opts)
        }
        LoadedInput::Explicit(mut g) => {
            let mut r = verify::VerifyReport::default();
            let flow = g.max_flow();
            match g.min_cut() {
                Ok((_, cut_value)) => r.push(
                    "oracle/cut-equals-flow",
                    cut_value == flow,
                    format!("cut {} flow {}", cut_value, flow),
                ),
                Err(e) => r.push("oracle/cut", false, e.to_string()),
            }
            r
        }
    };

    for check in &report.checks {
        println!(
            "{} {} ({})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if report.passed() {
        Ok(EXIT_OK)
    } else {
        Err((
            format!("{} invariant(s) violated", report.failures().len()),
            EXIT_VERIFY_FAILED,
        ))
    }
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let backend = Backend::parse(&args.common.backend)
        .ok_or_else(|| (format!("unknown backend {}", args.common.backend), EXIT_IO))?;
    let opts = options_from(&args.common).map_err(|m| (m, EXIT_IO))?;
    let name = instance_name(&args.input);
    let counts: Vec<usize> = args
        .segment_counts
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| "bad segment count"))
        .collect::<Result<_, _>>()
        .map_err(|m| (m.to_string(), EXIT_IO))?;

    let input = io::load_path(&args.input).map_err(io_err)?;
    let inst = match input {
        LoadedInput::Flow(inst) => inst,
        LoadedInput::Weights(sw) => {
            surface::build_st_graph(&sw, args.common.scale)
                .map_err(io_err)?
                .0
        }
        LoadedInput::Explicit(_) => {
            return Err(("bench needs a structured instance".into(), EXIT_IO))
        }
    };
    let reports = verify::bench(
        &name,
        &inst.topo,
        &inst.caps,
        backend,
        &counts,
        args.reps,
        &opts,
    )
    .map_err(io_err)?;
    let csv = report::to_csv(&reports);
    match args.out {
        Some(path) => {
            std::fs::write(&path, csv).map_err(|e| (e.to_string(), EXIT_IO))?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", csv),
    }
    Ok(EXIT_OK)
}
