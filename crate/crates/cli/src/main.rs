//! Command-line entry point: every operation of the library behind
//! reproducible, scriptable I/O.
//!
//! Exit codes: 0 success (or a Null verdict), 1 NonNull, 2 Inconclusive,
//! 3 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covspec::homotopy::{decide_null, verify_h1, Budget, Decision};
use covspec::io::{
    cover_dot, family_csv, parse_scale, rips_dot, spectrum_csv, ultra_csv, LoopDoc, SpaceDoc,
    WordsDoc,
};
use covspec::rips::{presentation, rips_graph, scale_set, ScaleSet};
use covspec::spaces::FiniteMetricSpace;
use covspec::spectrum::{critical_spectrum, homology_spectrum, Family};
use covspec::topology::{spanier_check, ultrametric_table, word_context};

#[derive(Parser)]
#[command(
    name = "covspec",
    about = "Discrete homotopy on finite metric spaces: chains, certificates, spectra, covers, and the covering-topology ultrametric",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for the data-parallel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Byte-identical outputs across runs and thread counts: fixed strategy
    /// order, sorted merges, wall-clock caps ignored.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    deterministic: bool,
    /// Random seed echoed into reports (no operation consumes randomness).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the primary artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// Search states / generic work units per strategy.
    #[arg(long, default_value_t = 200_000)]
    budget_states: usize,
    /// Maximum chain length the search may build.
    #[arg(long, default_value_t = 64)]
    budget_chain_len: usize,
    /// Coset table rows before enumeration gives up.
    #[arg(long, default_value_t = 20_000)]
    budget_coset_rows: usize,
    /// Wall-clock cap in milliseconds (ignored when deterministic).
    #[arg(long)]
    budget_wall_ms: Option<u64>,
}

impl BudgetArgs {
    fn to_budget(&self, deterministic: bool) -> Budget {
        Budget {
            max_states: self.budget_states,
            max_chain_len: self.budget_chain_len,
            max_coset_rows: self.budget_coset_rows,
            wall_ms: if deterministic {
                None
            } else {
                self.budget_wall_ms
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a space document; report every violated pair and triple.
    Validate {
        #[arg(long)]
        space: PathBuf,
    },
    /// Emit a space document from a generator.
    Gen {
        /// circle | hawaiian | product | wedge
        #[arg(long)]
        generator: String,
        #[arg(long)]
        circumference: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n_per_circle: Option<usize>,
        /// Factor documents for product/wedge.
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        a0: usize,
        #[arg(long, default_value_t = 0)]
        b0: usize,
        /// Expand to an explicit distance matrix document.
        #[arg(long, default_value_t = false)]
        materialize: bool,
    },
    /// Critical spectrum: homology-exact values, or the full certified
    /// report with --confirm.
    Spectrum {
        #[arg(long)]
        space: PathBuf,
        /// Extract witnesses and attach two-sided decisions.
        #[arg(long, default_value_t = false)]
        confirm: bool,
        /// json or csv.
        #[arg(long, default_value = "json")]
        format: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Decide nullity of a loop at a scale point.
    Null {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, name = "loop")]
        loop_: PathBuf,
        /// "k:at", "k:above", or a raw scale snapped to the grid.
        #[arg(long)]
        scale: Option<String>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Re-verify an emitted decision from scratch.
    Verify {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, name = "loop")]
        loop_: PathBuf,
        #[arg(long)]
        scale: Option<String>,
        /// Decision JSON as emitted by `null`.
        #[arg(long)]
        decision: PathBuf,
    },
    /// Materialize a cover ball at a scale point (DOT plus a JSON summary).
    Cover {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        scale: String,
        #[arg(long, default_value_t = 8)]
        radius: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Lift a loop into a cover ball and report whether it closes.
    Lift {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, name = "loop")]
        loop_: PathBuf,
        #[arg(long)]
        scale: String,
        #[arg(long, default_value_t = 8)]
        radius: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Pairwise ultrametric values over a word family.
    Ultra {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        words: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Certify that ball lollipops at scale index k die just above it.
    Spanier {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Spectrum growth across a space family.
    FamilyReport {
        /// hawaiian | circle | path
        #[arg(long)]
        generator: String,
        /// Range "lo..hi" (inclusive).
        #[arg(long)]
        k: String,
        #[arg(long, default_value_t = 24)]
        n_per_circle: usize,
        #[arg(long, default_value_t = 3.0)]
        circumference: f64,
        #[arg(long, default_value_t = 8)]
        base_n: usize,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Export the Rips graph at a scale point: DOT with tree edges bold, or
    /// the spanning-tree presentation as JSON.
    Rips {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        scale: String,
        /// dot or json (presentation export).
        #[arg(long, default_value = "dot")]
        format: String,
    },
}

fn read_to_string(path: &Path) -> Result<String, covspec::Error> {
    std::fs::read_to_string(path)
        .map_err(|e| covspec::Error::Document(format!("{}: {e}", path.display())))
}

fn load_space(path: &Path) -> Result<(FiniteMetricSpace, ScaleSet), covspec::Error> {
    let doc = SpaceDoc::from_json(&read_to_string(path)?)?;
    let space = doc.build()?;
    let scales = scale_set(&space);
    Ok((space, scales))
}

fn load_loop(path: &Path) -> Result<LoopDoc, covspec::Error> {
    LoopDoc::from_json(&read_to_string(path)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), covspec::Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| covspec::Error::Document(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<ExitCode, covspec::Error> {
    match &cli.command {
        Command::Validate { space } => {
            let doc = SpaceDoc::from_json(&read_to_string(space)?)?;
            match doc.build() {
                Ok(m) => {
                    #[derive(serde::Serialize)]
                    struct Ok_ {
                        valid: bool,
                        points: usize,
                        basepoint: usize,
                        diameter: f64,
                    }
                    emit(
                        &cli.out,
                        &json(&Ok_ {
                            valid: true,
                            points: m.n(),
                            basepoint: m.basepoint(),
                            diameter: m.diameter(),
                        }),
                    )?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    if let covspec::Error::InvalidMetric(violations) = &e {
                        #[derive(serde::Serialize)]
                        struct Bad<'a> {
                            valid: bool,
                            violations: &'a [covspec::error::MetricViolation],
                        }
                        emit(
                            &cli.out,
                            &json(&Bad {
                                valid: false,
                                violations,
                            }),
                        )?;
                        Ok(ExitCode::from(3))
                    } else {
                        Err(e)
                    }
                }
            }
        }
        Command::Gen {
            generator,
            circumference,
            n,
            k,
            n_per_circle,
            a,
            b,
            a0,
            b0,
            materialize,
        } => {
            let need = |o: &Option<f64>, what: &str| {
                o.ok_or_else(|| covspec::Error::Document(format!("missing --{what}")))
            };
            let needu = |o: &Option<usize>, what: &str| {
                o.ok_or_else(|| covspec::Error::Document(format!("missing --{what}")))
            };
            let gen_doc = match generator.as_str() {
                "circle" => covspec::io::GeneratorDoc::Circle {
                    circumference: need(circumference, "circumference")?,
                    n: needu(n, "n")?,
                },
                "hawaiian" => covspec::io::GeneratorDoc::Hawaiian {
                    k: needu(k, "k")?,
                    n_per_circle: needu(n_per_circle, "n-per-circle")?,
                },
                "product" | "wedge" => {
                    let pa = a
                        .as_ref()
                        .ok_or_else(|| covspec::Error::Document("missing --a".into()))?;
                    let pb = b
                        .as_ref()
                        .ok_or_else(|| covspec::Error::Document("missing --b".into()))?;
                    let da = SpaceDoc::from_json(&read_to_string(pa)?)?;
                    let db = SpaceDoc::from_json(&read_to_string(pb)?)?;
                    if generator == "product" {
                        covspec::io::GeneratorDoc::Product {
                            a: Box::new(da),
                            b: Box::new(db),
                        }
                    } else {
                        covspec::io::GeneratorDoc::Wedge {
                            a: Box::new(da),
                            b: Box::new(db),
                            a0: *a0,
                            b0: *b0,
                        }
                    }
                }
                other => {
                    return Err(covspec::Error::Document(format!(
                        "unknown generator {other:?}"
                    )))
                }
            };
            let doc = SpaceDoc {
                kind: "generator".into(),
                matrix: None,
                graph: None,
                generator: Some(gen_doc),
                basepoint: None,
                labels: None,
            };
            let space = doc.build()?; // validate before emitting
            let doc = if *materialize {
                SpaceDoc {
                    kind: "matrix".into(),
                    matrix: Some(space.matrix()),
                    graph: None,
                    generator: None,
                    basepoint: Some(space.basepoint()),
                    labels: None,
                }
            } else {
                doc
            };
            emit(&cli.out, &json(&doc))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum {
            space,
            confirm,
            format,
            budget,
        } => {
            let (m, scales) = load_space(space)?;
            let _ = &scales;
            if *confirm {
                let report = critical_spectrum(&m, &budget.to_budget(cli.deterministic));
                let text = match format.as_str() {
                    "csv" => spectrum_csv(&report),
                    _ => json(&report),
                };
                emit(&cli.out, &text)?;
            } else {
                let values = homology_spectrum(&m);
                let covering: Vec<f64> = values
                    .iter()
                    .map(|&v| covspec::spectrum::covering_value(v))
                    .collect();
                match format.as_str() {
                    "csv" => {
                        let mut text = String::from("value,covering_value\n");
                        for (v, c) in values.iter().zip(&covering) {
                            text.push_str(&format!("{v},{c}\n"));
                        }
                        emit(&cli.out, &text)?;
                    }
                    _ => {
                        #[derive(serde::Serialize)]
                        struct Doc {
                            critical_values: Vec<f64>,
                            covering_spectrum: Vec<f64>,
                        }
                        emit(
                            &cli.out,
                            &json(&Doc {
                                critical_values: values,
                                covering_spectrum: covering,
                            }),
                        )?;
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Null {
            space,
            loop_,
            scale,
            budget,
        } => {
            let (m, scales) = load_space(space)?;
            let ld = load_loop(loop_)?;
            let sp = match scale {
                Some(text) => parse_scale(&scales, text)?,
                None => scales.locate(ld.scale)?,
            };
            eprintln!("scale point {sp} (d = {})", scales.value(sp.index)?);
            let chain =
                covspec::chains::Chain::new(&m, scales.chain_scale(sp)?, ld.points.clone())?;
            let decision = decide_null(
                &m,
                &scales,
                sp,
                &chain,
                &budget.to_budget(cli.deterministic),
            )?;
            emit(&cli.out, &json(&decision))?;
            Ok(match decision {
                Decision::Null(_) => ExitCode::SUCCESS,
                Decision::NonNull(_) => ExitCode::from(1),
                Decision::Inconclusive(_) => ExitCode::from(2),
            })
        }
        Command::Verify {
            space,
            loop_,
            scale,
            decision,
        } => {
            let (m, scales) = load_space(space)?;
            let ld = load_loop(loop_)?;
            let sp = match scale {
                Some(text) => parse_scale(&scales, text)?,
                None => scales.locate(ld.scale)?,
            };
            let chain =
                covspec::chains::Chain::new(&m, scales.chain_scale(sp)?, ld.points.clone())?;
            let decision: Decision = serde_json::from_str(&read_to_string(decision)?)
                .map_err(|e| covspec::Error::Document(e.to_string()))?;
            let verdict = match &decision {
                Decision::Null(cert) => {
                    if cert.source.points != chain.points {
                        Err(covspec::Error::Document(
                            "certificate source does not match the loop".into(),
                        ))
                    } else {
                        cert.replay(&m).map(|_| ())
                    }
                }
                Decision::NonNull(cert) => verify_h1(&m, &scales, sp, &chain, cert),
                Decision::Inconclusive(_) => Err(covspec::Error::Document(
                    "inconclusive decisions carry no certificate".into(),
                )),
            };
            match verdict {
                Ok(()) => {
                    emit(&cli.out, "{\"verified\":true}\n")?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    emit(
                        &cli.out,
                        &format!("{{\"verified\":false,\"reason\":{:?}}}\n", e.to_string()),
                    )?;
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::Cover {
            space,
            scale,
            radius,
            budget,
        } => {
            let (m, scales) = load_space(space)?;
            let sp = parse_scale(&scales, scale)?;
            let cover = covspec::covers::build_cover(
                &m,
                &scales,
                sp,
                *radius,
                &budget.to_budget(cli.deterministic),
            )?;
            #[derive(serde::Serialize)]
            struct Summary {
                scale: String,
                vertices: usize,
                edges: usize,
                complete: bool,
                group_order: Option<usize>,
            }
            eprintln!(
                "{}",
                json(&Summary {
                    scale: sp.to_string(),
                    vertices: cover.vertex_count(),
                    edges: cover.edges.len(),
                    complete: cover.complete,
                    group_order: cover.group_order(),
                })
                .trim()
            );
            emit(&cli.out, &cover_dot(&cover))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Lift {
            space,
            loop_,
            scale,
            radius,
            budget,
        } => {
            let (m, scales) = load_space(space)?;
            let sp = parse_scale(&scales, scale)?;
            let ld = load_loop(loop_)?;
            let chain =
                covspec::chains::Chain::new(&m, scales.chain_scale(sp)?, ld.points.clone())?;
            let cover = covspec::covers::build_cover(
                &m,
                &scales,
                sp,
                *radius,
                &budget.to_budget(cli.deterministic),
            )?;
            let start = cover
                .find_vertex(chain.start(), 0)
                .ok_or(covspec::Error::LiftLeftBall)?;
            let (end, closed) = covspec::covers::lift_chain(&cover, &m, &scales, &chain, start)?;
            #[derive(serde::Serialize)]
            struct LiftOut {
                endpoint: usize,
                endpoint_base: usize,
                closed: bool,
            }
            emit(
                &cli.out,
                &json(&LiftOut {
                    endpoint: end,
                    endpoint_base: cover.project(end)?,
                    closed,
                }),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Ultra {
            space,
            words,
            format,
            budget,
        } => {
            let (m, scales) = load_space(space)?;
            let wd = WordsDoc::from_json(&read_to_string(words)?)?;
            let ref_sp = parse_scale(&scales, &wd.scale)?;
            let ctx = word_context(&m, &scales, ref_sp)?;
            let table = ultrametric_table(
                &m,
                &scales,
                &ctx,
                &wd.words(),
                &budget.to_budget(cli.deterministic),
            )?;
            let text = match format.as_str() {
                "json" => json(&table),
                _ => ultra_csv(&table),
            };
            emit(&cli.out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Spanier { space, k, budget } => {
            let (m, scales) = load_space(space)?;
            let report = spanier_check(&m, &scales, *k, &budget.to_budget(cli.deterministic))?;
            let ok = report.failures.is_empty();
            emit(&cli.out, &json(&report))?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::FamilyReport {
            generator,
            k,
            n_per_circle,
            circumference,
            base_n,
            format,
        } => {
            let (lo, hi) = k
                .split_once("..")
                .ok_or_else(|| covspec::Error::Document(format!("bad range {k:?}, want lo..hi")))?;
            let lo: usize = lo
                .parse()
                .map_err(|_| covspec::Error::Document(format!("bad range start {lo:?}")))?;
            let hi: usize = hi
                .parse()
                .map_err(|_| covspec::Error::Document(format!("bad range end {hi:?}")))?;
            let family = match generator.as_str() {
                "hawaiian" => Family::Hawaiian {
                    n_per_circle: *n_per_circle,
                },
                "circle" => Family::Circle {
                    circumference: *circumference,
                    base_n: *base_n,
                },
                "path" => Family::Path {
                    points_per_k: *base_n,
                },
                other => {
                    return Err(covspec::Error::Document(format!(
                        "unknown family {other:?}"
                    )))
                }
            };
            let report = covspec::spectrum::family_report(&family, lo, hi)?;
            let text = match format.as_str() {
                "csv" => family_csv(&report),
                _ => json(&report),
            };
            emit(&cli.out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rips {
            space,
            scale,
            format,
        } => {
            let (m, scales) = load_space(space)?;
            let sp = parse_scale(&scales, scale)?;
            let edges = rips_graph(&m, &scales, sp)?;
            match format.as_str() {
                "json" => {
                    let pres = presentation(&m, &scales, sp, m.basepoint())?;
                    emit(&cli.out, &json(&covspec::io::PresentationDoc::from(&pres)))?;
                }
                _ => {
                    let pres = presentation(&m, &scales, sp, m.basepoint()).ok();
                    emit(&cli.out, &rips_dot(&m, &edges, pres.as_ref()))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let body = || match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    };
    #[cfg(feature = "parallel")]
    {
        let threads = if cli.threads == 0 {
            num_threads_default()
        } else {
            cli.threads
        };
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                ExitCode::from(3)
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        body()
    }
}

#[cfg(feature = "parallel")]
fn num_threads_default() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
