//! Command-line front end: atlas builds, per-graph bounds, angle
//! optimization, hierarchy verification, worst-case bounds, and plot data.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

use qaoa_bounds::atlas::{build_atlas, load_atlas, save_atlas, Atlas, BuildOptions};
use qaoa_bounds::bounds::{
    build_qgon_tilings, lower_bound_fixed_angles, plot_data_csv, trunc4, upper_bound_cmin,
};
use qaoa_bounds::engine::{edge_expectation, Angles};
use qaoa_bounds::graph::{max_basis_cycle_length, parse_graph, Graph};
use qaoa_bounds::hierarchy::{verify_hierarchy, HierarchyOptions};
use qaoa_bounds::optimize::{find_all_maxima, multistart};
use qaoa_bounds::{atlas as atlas_mod, named};

#[derive(Parser)]
#[command(
    name = "qaoa-bounds",
    version,
    about = "Performance bounds for fixed-depth MAXCUT QAOA on 3-regular graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by commands that evaluate expectations.
#[derive(Args)]
struct CommonArgs {
    /// Number of QAOA layers.
    #[arg(long, env = "QAOA_BOUNDS_P")]
    p: u32,

    /// Worker threads (accepted for interface stability; this build
    /// computes serially regardless).
    #[arg(long, env = "QAOA_BOUNDS_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the neighborhood-class atlas and write it to a file.
    Atlas {
        #[command(flatten)]
        common: CommonArgs,

        /// Output path for the atlas JSON.
        #[arg(long, env = "QAOA_BOUNDS_OUT")]
        out: Option<PathBuf>,

        /// Seed for the per-class multistart optimizer.
        #[arg(long, env = "QAOA_BOUNDS_SEED", default_value_t = 2021)]
        seed: u64,

        /// Random starts per class.
        #[arg(long, default_value_t = 25)]
        starts: usize,

        /// Skip per-class angle optimization (fixed-angle columns only).
        #[arg(long)]
        no_optimize: bool,
    },

    /// Lower-bound the guaranteed cut fraction of a 3-regular graph.
    Bound {
        #[command(flatten)]
        common: CommonArgs,

        /// Path to a graph file (first line "n m", then one "u v" per edge).
        graph: Option<PathBuf>,

        /// Use a built-in graph instead of a file (k4, k33, prism, cube,
        /// petersen, heawood, moebius-kantor, mcgee, two-triangle).
        #[arg(long, conflicts_with = "graph")]
        named: Option<String>,

        /// Load the atlas from this file instead of rebuilding it.
        #[arg(long, env = "QAOA_BOUNDS_ATLAS")]
        atlas: Option<PathBuf>,

        /// Angles in degrees, interleaved g1,b1,g2,b2,... (default: the
        /// reference fixed angles for the depth).
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,

        /// Print the full report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },

    /// Optimize angles for one atlas class.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,

        /// Atlas position of the class to optimize (default 0, the tree).
        #[arg(long, default_value_t = 0)]
        class: u32,

        /// Load the atlas from this file instead of rebuilding it.
        #[arg(long, env = "QAOA_BOUNDS_ATLAS")]
        atlas: Option<PathBuf>,

        /// Seed for the multistart generator.
        #[arg(long, env = "QAOA_BOUNDS_SEED", default_value_t = 2021)]
        seed: u64,

        /// Random starts.
        #[arg(long, default_value_t = 25)]
        starts: usize,

        /// Census every local maximum from a mesh of starts and list the
        /// distinct clusters.
        #[arg(long)]
        maxima: bool,
    },

    /// Verify the edge-replacement hierarchy at a depth.
    VerifyHierarchy {
        #[command(flatten)]
        common: CommonArgs,

        /// Load the atlas from this file instead of rebuilding it.
        #[arg(long, env = "QAOA_BOUNDS_ATLAS")]
        atlas: Option<PathBuf>,

        /// Directory for per-class checkpoint files.
        #[arg(long, env = "QAOA_BOUNDS_OUT")]
        out: Option<PathBuf>,

        /// Reuse matching checkpoints instead of recomputing.
        #[arg(long)]
        resume: bool,

        /// Process only classes with index % n == i (written "i/n").
        #[arg(long)]
        shard: Option<String>,

        /// Print per-class progress to stderr.
        #[arg(long)]
        progress: bool,
    },

    /// Print the worst-case upper bound for a depth.
    UpperBound {
        #[command(flatten)]
        common: CommonArgs,
    },

    /// Emit the bound-versus-depth series as CSV.
    Plotdata {
        /// Output path (stdout when absent).
        #[arg(long, env = "QAOA_BOUNDS_OUT")]
        out: Option<PathBuf>,
    },

    /// Build the even/odd tiling witness pair behind the upper bound.
    Tilings {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn named_graph(name: &str) -> anyhow::Result<(Graph, String)> {
    let g = match name {
        "k4" => named::k4(),
        "k33" => named::k33(),
        "prism" => named::prism(),
        "cube" => named::cube(),
        "petersen" => named::petersen(),
        "heawood" => named::heawood(),
        "moebius-kantor" => named::moebius_kantor(),
        "mcgee" => named::mcgee(),
        "two-triangle" => named::two_triangle_demo(),
        _ => bail!(
            "unknown graph name {name:?} (expected one of k4, k33, prism, cube, \
             petersen, heawood, moebius-kantor, mcgee, two-triangle)"
        ),
    };
    Ok((g, name.to_string()))
}

/// Loads an atlas from `path` when given (validating depth), otherwise
/// builds the fixed-angle columns in memory.
fn obtain_atlas(p: u32, path: &Option<PathBuf>) -> anyhow::Result<Atlas> {
    match path {
        Some(path) => {
            let atlas =
                load_atlas(path).with_context(|| format!("loading atlas {}", path.display()))?;
            if atlas.p != p {
                bail!("atlas {} has depth {}, expected {p}", path.display(), atlas.p);
            }
            Ok(atlas)
        }
        None => Ok(build_atlas(p, &BuildOptions { optimize: false, ..BuildOptions::default() })?),
    }
}

fn parse_shard(text: &str) -> anyhow::Result<(u32, u32)> {
    let (i, n) = text
        .split_once('/')
        .ok_or_else(|| anyhow!("shard must be written i/n, e.g. 0/4"))?;
    let i: u32 = i.trim().parse().context("shard index")?;
    let n: u32 = n.trim().parse().context("shard count")?;
    if n == 0 || i >= n {
        bail!("shard must satisfy i < n, n >= 1");
    }
    Ok((i, n))
}

fn parse_angles(p: u32, vals: &Option<Vec<f64>>) -> anyhow::Result<Option<Angles>> {
    match vals {
        None => Ok(None),
        Some(v) => {
            let a = Angles::from_interleaved_degrees(v)?;
            if a.p() != p as usize {
                bail!("expected {} angles for depth {p}, got {}", 2 * p, v.len());
            }
            Ok(Some(a))
        }
    }
}

fn degrees_string(a: &Angles) -> String {
    let vals: Vec<String> = a
        .to_interleaved_degrees()
        .iter()
        .map(|d| format!("{d:.4}"))
        .collect();
    vals.join(", ")
}

fn cmd_atlas(
    common: &CommonArgs,
    out: &Option<PathBuf>,
    seed: u64,
    starts: usize,
    no_optimize: bool,
) -> anyhow::Result<()> {
    let p = common.p;
    let opts = BuildOptions { optimize: !no_optimize && p > 0, starts, seed };
    let mut atlas = build_atlas(p, &opts)?;
    if p == 1 {
        // The relevant-environment census is cheap at depth 1; record how
        // many environments each class centers.
        let envs = qaoa_bounds::hierarchy::enumerate_environments(1, true, &atlas)?;
        for (idx, entry) in atlas.entries.iter_mut().enumerate() {
            entry.env_count =
                Some(envs.iter().filter(|e| e.center_class == idx as u32).count() as u64);
        }
    }
    println!("depth {p}: {} classes", atlas.entries.len());
    for entry in &atlas.entries {
        let opt = entry
            .f_opt
            .map(|v| format!("{:.4}", trunc4(v)))
            .unwrap_or_else(|| "-".to_string());
        let envs = entry
            .env_count
            .map(|n| format!(" envs={n}"))
            .unwrap_or_default();
        println!(
            "class {:>3}: n={:>2} m={:>2} c={}/{} f={:.4} f_opt={}{}",
            entry.index.1,
            entry.subgraph.graph.vertex_count(),
            entry.subgraph.graph.edge_count(),
            entry.c_max.best_cut,
            entry.c_max.total_edges,
            trunc4(entry.f_fixed),
            opt,
            envs,
        );
    }
    if let Some(path) = out {
        save_atlas(&atlas, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bound(
    common: &CommonArgs,
    graph: &Option<PathBuf>,
    named: &Option<String>,
    atlas_path: &Option<PathBuf>,
    angles: &Option<Vec<f64>>,
    json: bool,
) -> anyhow::Result<()> {
    let p = common.p;
    let (g, graph_id) = match (graph, named) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            (parse_graph(&text)?, path.display().to_string())
        }
        (None, Some(name)) => named_graph(name)?,
        (None, None) => bail!("provide a graph file or --named NAME"),
    };
    let atlas = obtain_atlas(p, atlas_path)?;
    let angles = match parse_angles(p, angles)? {
        Some(a) => a,
        None => Angles::fixed_cubic(p as usize)
            .ok_or_else(|| anyhow!("no reference fixed angles at depth {p}; pass --angles"))?,
    };
    let report = lower_bound_fixed_angles(&g, &graph_id, p, &atlas, &angles)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report.to_json())?);
    } else {
        println!("graph: {graph_id} ({} vertices, {} edges)", g.vertex_count(), g.edge_count());
        println!("angles (deg): {}", degrees_string(&report.angles_used));
        let present: Vec<String> = report
            .counts
            .counts
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n > 0)
            .map(|(k, &n)| format!("{n} of class {k}"))
            .collect();
        println!("census: {}", present.join(", "));
        println!(
            "numerator {:.6}, denominator {}/{}",
            report.numerator,
            report.denominator.numer(),
            report.denominator.denom()
        );
        println!("lower bound: {:.4}", report.lower_bound);
    }
    Ok(())
}

fn cmd_optimize(
    common: &CommonArgs,
    class: u32,
    atlas_path: &Option<PathBuf>,
    seed: u64,
    starts: usize,
    maxima: bool,
) -> anyhow::Result<()> {
    let p = common.p;
    if p == 0 {
        bail!("depth 0 has no angles to optimize");
    }
    let atlas = obtain_atlas(p, atlas_path)?;
    let entry = atlas
        .entries
        .get(class as usize)
        .ok_or_else(|| anyhow!("class {class} out of range (atlas has {})", atlas.entries.len()))?;
    println!(
        "class {class}: {} vertices, {} edges, c={}/{}",
        entry.subgraph.graph.vertex_count(),
        entry.subgraph.graph.edge_count(),
        entry.c_max.best_cut,
        entry.c_max.total_edges
    );
    if maxima {
        let found = find_all_maxima(&entry.subgraph, 6)?;
        println!("{} distinct local maxima:", found.len());
        for (a, v) in &found {
            println!("  {:.6} at ({})", v, degrees_string(a));
        }
    } else {
        let r = multistart(&entry.subgraph, starts, seed)?;
        println!("best value: {:.6}", r.best_value);
        println!("best angles (deg): {}", degrees_string(&r.best_angles));
        println!("runs: {}, converged: {}", r.starts_used, r.converged);
    }
    Ok(())
}

fn cmd_verify_hierarchy(
    common: &CommonArgs,
    atlas_path: &Option<PathBuf>,
    out: &Option<PathBuf>,
    resume: bool,
    shard: &Option<String>,
    progress: bool,
) -> anyhow::Result<()> {
    let p = common.p;
    let atlas = obtain_atlas(p, atlas_path)?;
    let opts = HierarchyOptions {
        angles: None,
        checkpoint_dir: out.clone(),
        resume,
        shard: shard.as_deref().map(parse_shard).transpose()?,
        progress,
    };
    let report = verify_hierarchy(p, &atlas, &opts)?;
    let scope = if report.sharded { " (this shard)" } else { "" };
    println!(
        "PASS {}/{} environments, bound {:.4}{scope}",
        report.relevant_count,
        report.relevant_count,
        trunc4(report.bound)
    );
    if report.b_false_total > 0 {
        println!(
            "note: replacement clause fails on {} environment(s); descent holds via the edge-choice clause",
            report.b_false_total
        );
    }
    Ok(())
}

fn cmd_upper_bound(common: &CommonArgs) -> anyhow::Result<()> {
    let r = upper_bound_cmin(common.p)?;
    let v = *r.numer() as f64 / *r.denom() as f64;
    println!("{}/{} = {:.6}", r.numer(), r.denom(), v);
    Ok(())
}

fn cmd_plotdata(out: &Option<PathBuf>) -> anyhow::Result<()> {
    let csv = plot_data_csv()?;
    match out {
        Some(path) => {
            fs::write(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_tilings(common: &CommonArgs) -> anyhow::Result<()> {
    let p = common.p;
    let (even, odd) = build_qgon_tilings(p)?;
    let angles = Angles::fixed_cubic(p as usize)
        .ok_or_else(|| anyhow!("no reference fixed angles at depth {p}"))?;
    let tree = atlas_mod::tree_neighborhood(p)?;
    let f_tree = edge_expectation(&tree, &angles)?;
    for (name, g) in [("even", &even), ("odd", &odd)] {
        let basis_max = max_basis_cycle_length(g)?
            .map(|l| l.to_string())
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{name}: {} vertices, {} edges, longest basis cycle {basis_max}",
            g.vertex_count(),
            g.edge_count()
        );
    }
    println!("per-edge expectation (both tilings, all edges tree-like): {f_tree:.4}");
    println!("guaranteed fraction is therefore at most {}", upper_bound_cmin(p)?);
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Atlas { common, out, seed, starts, no_optimize } => {
            cmd_atlas(common, out, *seed, *starts, *no_optimize)
        }
        Command::Bound { common, graph, named, atlas, angles, json } => {
            cmd_bound(common, graph, named, atlas, angles, *json)
        }
        Command::Optimize { common, class, atlas, seed, starts, maxima } => {
            cmd_optimize(common, *class, atlas, *seed, *starts, *maxima)
        }
        Command::VerifyHierarchy { common, atlas, out, resume, shard, progress } => {
            cmd_verify_hierarchy(common, atlas, out, *resume, shard, *progress)
        }
        Command::UpperBound { common } => cmd_upper_bound(common),
        Command::Plotdata { out } => cmd_plotdata(out),
        Command::Tilings { common } => cmd_tilings(common),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
