mod input;
mod verbs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use input::Failure;

#[derive(Parser)]
#[command(name = "resolvix", version, about = "Finite-scale experiments on splitting bases and coloring posets")]
struct Cli {
    /// Seed for every randomized step. `RESOLVIX_SEED` overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the per-pair space checks.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Streaming cofinal 2-coloring of a poset.
    Stone {
        /// Poset file or builtin (`chain`, `tree2`, `grid`, `grid-builder:<cfg>`).
        #[arg(long)]
        poset: String,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Also write the coloring as a partition file.
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Splits a family into a good pair by merging local pairs.
    Resolve {
        /// Family file or builtin (`dyadic`, `dyadic-unions`).
        #[arg(long)]
        family: String,
        /// Demand coverage only on the first N ground points.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Extracts a weakly increasing negligible subfamily.
    Negligible {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 4)]
        target: usize,
    },
    /// Splits the members below a target of a union-closed family.
    Finunion {
        #[arg(long)]
        family: String,
        /// The target member.
        #[arg(long)]
        member: String,
        /// Strictly decreasing member chain, comma separated. Greedy if omitted.
        #[arg(long, value_delimiter = ',')]
        chain: Vec<String>,
        /// Separating point between consecutive chain members, comma separated.
        #[arg(long, value_delimiter = ',')]
        points: Vec<String>,
    },
    /// Seeded good pair meeting every density requirement in turn.
    Cohen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        partition_out: Option<PathBuf>,
    },
    /// Searches for homogeneous interval chains under a coloring.
    IkCheck {
        #[arg(long)]
        poset: String,
        /// Coloring to test. Without it an interval-avoiding partition is built.
        #[arg(long)]
        partition: Option<String>,
        /// Chain length sought.
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        window: usize,
        /// Interval height that the built partition must split.
        #[arg(long, default_value_t = 3)]
        threshold: usize,
    },
    /// Builds the grid poset stage by stage.
    BuildGrid {
        #[arg(long, default_value_t = 5)]
        stages: usize,
        #[arg(long, default_value_t = 4)]
        block: usize,
        #[arg(long, default_value_t = 3)]
        graft: usize,
        #[arg(long, default_value = "identity", value_parser = ["identity", "seeded"])]
        coloring: String,
        #[arg(long, default_value_t = 512)]
        levels: usize,
        #[arg(long)]
        poset_out: Option<PathBuf>,
    },
    /// Conditions of the tree forcing.
    #[command(subcommand)]
    Forcing(ForcingVerb),
    /// Branch-space checks on a candidate fragment.
    #[command(subcommand)]
    Space(SpaceVerb),
    /// Identifies points with equal member traces.
    Quotient {
        #[arg(long)]
        family: String,
        #[arg(long)]
        family_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ForcingVerb {
    /// Checks a condition against the axioms.
    Validate {
        #[arg(long)]
        condition: String,
    },
    /// Checks that `p` extends `q`.
    Leq {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Common extension of two twins.
    Oplus {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long)]
        condition_out: Option<PathBuf>,
    },
    /// Applies one-step extensions in order.
    Extend {
        #[arg(long)]
        condition: String,
        /// `add-point (a,n) γ`, `uplus (a,n) (b,m) γ`, `define-f α β` or `define-g (a,n) α`.
        #[arg(long = "step", required = true)]
        steps: Vec<String>,
        #[arg(long)]
        condition_out: Option<PathBuf>,
    },
    /// Meets a dense-set schedule and reports the candidate fragment.
    Run {
        /// Schedule file, or `twin:<seed>` for a generated twin schedule.
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long)]
        fragment_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SpaceVerb {
    Check {
        #[arg(long)]
        fragment: String,
        #[arg(long, value_delimiter = ',', default_value = "g1,g3,g4,g5", value_parser = ["g1", "g3", "g4", "g5"])]
        checks: Vec<String>,
        /// Partition of the fragment's points for the game. Level parity if omitted.
        #[arg(long)]
        partition: Option<String>,
    },
}

pub struct Ctx {
    pub seed: u64,
    pub jobs: usize,
}

pub struct Outcome {
    pub config: Value,
    pub result: Value,
    /// A checked property failed; the report is still written.
    pub violated: bool,
}

fn seed(cli_seed: u64) -> Result<u64, Failure> {
    match std::env::var("RESOLVIX_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| Failure::Input(format!("RESOLVIX_SEED: not a number: {s:?}"))),
        Err(_) => Ok(cli_seed),
    }
}

fn dispatch(verb: Verb, ctx: &Ctx) -> Result<(String, Outcome), Failure> {
    use verbs::*;
    Ok(match verb {
        Verb::Stone { poset, steps, partition_out } => ("stone".into(), stone(ctx, &poset, steps, partition_out)?),
        Verb::Resolve { family, window, partition_out } => {
            ("resolve".into(), resolve(&family, window, partition_out)?)
        }
        Verb::Negligible { family, target } => ("negligible".into(), negligible(&family, target)?),
        Verb::Finunion { family, member, chain, points } => {
            ("finunion".into(), finunion(&family, &member, &chain, &points)?)
        }
        Verb::Cohen { family, partition_out } => ("cohen".into(), cohen(ctx, &family, partition_out)?),
        Verb::IkCheck { poset, partition, k, window, threshold } => {
            ("ik-check".into(), ik_check(ctx, &poset, partition.as_deref(), k, window, threshold)?)
        }
        Verb::BuildGrid { stages, block, graft, coloring, levels, poset_out } => {
            ("build-grid".into(), build_grid(ctx, stages, block, graft, &coloring, levels, poset_out)?)
        }
        Verb::Forcing(f) => match f {
            ForcingVerb::Validate { condition } => ("forcing validate".into(), forcing_validate(&condition)?),
            ForcingVerb::Leq { p, q } => ("forcing leq".into(), forcing_leq(&p, &q)?),
            ForcingVerb::Oplus { p, q, condition_out } => ("forcing oplus".into(), forcing_oplus(&p, &q, condition_out)?),
            ForcingVerb::Extend { condition, steps, condition_out } => {
                ("forcing extend".into(), forcing_extend(&condition, &steps, condition_out)?)
            }
            ForcingVerb::Run { schedule, budget, fragment_out } => {
                ("forcing run".into(), forcing_run(ctx, &schedule, budget, fragment_out)?)
            }
        },
        Verb::Space(SpaceVerb::Check { fragment, checks, partition }) => {
            ("space check".into(), space_check(ctx, &fragment, &checks, partition.as_deref())?)
        }
        Verb::Quotient { family, family_out } => ("quotient".into(), quotient(&family, family_out)?),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let fail = |f: Failure| {
        eprintln!("resolvix: {}", f.message());
        ExitCode::from(f.code())
    };
    let ctx = match seed(cli.seed) {
        Ok(seed) => Ctx { seed, jobs: cli.jobs.max(1) },
        Err(f) => return fail(f),
    };
    let (verb, outcome) = match dispatch(cli.verb, &ctx) {
        Ok(v) => v,
        Err(f) => return fail(f),
    };
    let report = json!({
        "tool": "resolvix",
        "version": env!("CARGO_PKG_VERSION"),
        "verb": verb,
        "config": outcome.config,
        "seed": ctx.seed,
        "jobs": ctx.jobs,
        "violated": outcome.violated,
        "result": outcome.result,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &cli.out {
        Some(path) => {
            if let Err(f) = input::write(path, &text) {
                return fail(f);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(if outcome.violated { 3 } else { 0 })
}
