//! Command-line front end for the room accessibility auditor.
//!
//! [`run`] is the whole program minus process exit, so tests can drive it
//! with in-memory output buffers.

pub mod commands;
mod error;
pub mod server;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use room_audit_core::evaluation::DEFAULT_TOLERANCE;
use room_audit_core::rubric::Community;
use serde_json::json;

pub use error::{CliError, ExitKind};

use commands::{AuditArgs, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "room-audit", version, about = "Audit indoor scans against accessibility rubrics")]
pub struct Cli {
    /// Output format for results and errors.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a rubric file.
    ValidateRubrics { path: PathBuf },

    /// Fuse a detection stream into a scene and write a scan report.
    Audit {
        #[arg(long)]
        scene: PathBuf,
        /// JSON Lines detections; without it the scene's own objects are audited.
        #[arg(long)]
        stream: Option<PathBuf>,
        /// Rubric file; the built-in set is used otherwise.
        #[arg(long)]
        rubrics: Option<PathBuf>,
        /// Limit to rubrics serving this community (repeatable).
        #[arg(long = "community")]
        communities: Vec<Community>,
        /// Skip a rubric by id (repeatable).
        #[arg(long = "exclude-rubric")]
        exclude: Vec<String>,
        #[arg(long)]
        fusion_config: Option<PathBuf>,
        #[arg(long)]
        class_extents: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Record the wall-clock generation time in the report.
        #[arg(long)]
        timestamps: bool,
    },

    /// Score one report against ground truth.
    Evaluate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Rubric file used to check ground-truth rubric ids.
        #[arg(long)]
        rubrics: Option<PathBuf>,
        /// Matching radius in meters.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Count dismissed issues as reported.
        #[arg(long)]
        include_dismissed: bool,
    },

    /// Per-scan metrics, their mean and inter-scan agreement for one space.
    Consistency {
        #[arg(required_unless_present = "published", conflicts_with = "published")]
        reports: Vec<PathBuf>,
        #[arg(long, required_unless_present = "published")]
        gt: Option<PathBuf>,
        #[arg(long)]
        rubrics: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long)]
        include_dismissed: bool,
        /// Recompute averages from the bundled field-study rows instead.
        #[arg(long, conflicts_with = "gt")]
        published: bool,
    },

    /// Generate a synthetic scene, its ground truth and a detection stream.
    Simulate {
        #[arg(long)]
        scene_spec: PathBuf,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        rubrics: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },

    /// Serve a report to the review UI and persist reviewer decisions.
    Serve {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Static files served for paths outside the API.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<Output, CliError> {
    match command {
        Command::ValidateRubrics { path } => commands::validate_rubrics(&path),
        Command::Audit {
            scene,
            stream,
            rubrics,
            communities,
            exclude,
            fusion_config,
            class_extents,
            out,
            timestamps,
        } => commands::audit_cmd(&AuditArgs {
            scene,
            stream,
            rubrics,
            communities,
            exclude,
            fusion_config,
            class_extents,
            out,
            timestamps,
        }),
        Command::Evaluate {
            report,
            gt,
            rubrics,
            tolerance,
            include_dismissed,
        } => commands::evaluate_cmd(&report, &gt, rubrics.as_deref(), tolerance, include_dismissed),
        Command::Consistency {
            reports,
            gt,
            rubrics,
            tolerance,
            include_dismissed,
            published,
        } => {
            if published {
                commands::consistency_published()
            } else {
                let gt = gt.ok_or_else(|| CliError::validation("--gt is required"))?;
                commands::consistency_cmd(&reports, &gt, rubrics.as_deref(), tolerance, include_dismissed)
            }
        }
        Command::Simulate {
            scene_spec,
            trajectory,
            rubrics,
            out_dir,
        } => commands::simulate_cmd(&scene_spec, trajectory.as_deref(), rubrics.as_deref(), &out_dir),
        Command::Serve {
            report,
            port,
            host,
            assets,
        } => {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::internal(format!("cannot start runtime: {e}")))?;
            rt.block_on(server::serve(&report, &host, port, assets.as_deref()))?;
            Ok(Output {
                json: json!({"stopped": true}),
                text: "server stopped".into(),
                warnings: Vec::new(),
            })
        }
    }
}

/// Guesses the requested format before clap has parsed, so argument errors
/// can honor `--format json` too.
fn sniff_format(args: &[OsString]) -> Format {
    let mut it = args.iter().filter_map(|a| a.to_str());
    while let Some(a) = it.next() {
        if a == "--format=json" || (a == "--format" && it.next() == Some("json")) {
            return Format::Json;
        }
    }
    Format::Text
}

fn report_error(format: Format, e: &CliError, err: &mut dyn Write) {
    let _ = match format {
        Format::Json => writeln!(err, "{}", json!({ "error": e })),
        Format::Text => writeln!(err, "error: {e}"),
    };
}

/// Runs the program on `args` (including the binary name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let format = sniff_format(&args);
            match format {
                Format::Text => {
                    let _ = write!(err, "{e}");
                }
                Format::Json => report_error(format, &CliError::validation(e.kind().to_string()), err),
            }
            return ExitKind::Validation.code();
        }
    };
    let format = cli.format;
    match dispatch(cli.command) {
        Ok(o) => {
            for w in &o.warnings {
                let _ = match format {
                    Format::Json => writeln!(err, "{}", json!({ "warning": w })),
                    Format::Text => writeln!(err, "warning: {w}"),
                };
            }
            let _ = match format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&o.json).unwrap_or_default()),
                Format::Text => writeln!(out, "{}", o.text),
            };
            0
        }
        Err(e) => {
            report_error(format, &e, err);
            e.code()
        }
    }
}
