use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod settings;

use settings::{Format, ModelArgs};

/// Student-score analytics: scoring, exploratory statistics and champion
/// regression models.
#[derive(Debug, Parser)]
#[command(name = "edumine", version, about)]
struct Cli {
    /// Log verbosity (repeat for more)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort: student and school tables, schemas and credits
    Synth {
        /// Generator settings (`key = value` lines)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_students: Option<usize>,
        #[arg(long)]
        n_schools: Option<usize>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Score credit records and join them onto a roster
    Prepare {
        #[arg(long)]
        roster: PathBuf,
        /// Schema of the roster
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        credits: PathBuf,
        /// Output table
        #[arg(long)]
        out: PathBuf,
        /// Output schema [default: output path with a `.schema` extension]
        #[arg(long)]
        out_schema: Option<PathBuf>,
    },
    /// Descriptive statistics, ANOVA and banded correlations
    Eda {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Comma-separated interval columns [default: the target columns]
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[arg(long)]
        group_by: Option<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Also write the report into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the three candidates, select the champion and save it
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Run configuration (`key = value` lines)
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Output directory for artifacts and reports
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-row predictions of a saved model
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Predictions table
        #[arg(long)]
        out: PathBuf,
    },
    /// MAPE, ASE and variable worth of a saved model on a scored cohort
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Tree artifact for variable worth [default: the model if it is a
        /// tree, else `tree_model.json` beside it]
        #[arg(long)]
        worth_model: Option<PathBuf>,
        #[arg(long, value_parser = settings::parse_denominator)]
        mape_denominator: Option<edumine::select::MapeDenominator>,
        /// Variables listed in the worth table
        #[arg(long, default_value_t = 30)]
        top: usize,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partition, train, select, score and evaluate in one run
    Pipeline {
        #[arg(long)]
        train_data: PathBuf,
        #[arg(long)]
        score_data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Schema of the score table [default: --schema]
        #[arg(long)]
        score_schema: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, default_value_t = 30)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Synth {
            config,
            seed,
            n_students,
            n_schools,
            out,
        } => commands::synth(config.as_deref(), seed, n_students, n_schools, &out),
        Command::Prepare {
            roster,
            schema,
            credits,
            out,
            out_schema,
        } => commands::prepare(&roster, &schema, &credits, &out, out_schema.as_deref()),
        Command::Eda {
            data,
            schema,
            columns,
            group_by,
            format,
            out,
        } => commands::eda(
            &data,
            &schema,
            &columns,
            group_by.as_deref(),
            format,
            out.as_deref(),
        ),
        Command::Train {
            data,
            schema,
            config,
            model,
            format,
            out,
        } => commands::train(&data, &schema, config.as_deref(), &model, format, &out),
        Command::Score {
            model,
            data,
            schema,
            out,
        } => commands::score(&model, &data, &schema, &out),
        Command::Evaluate {
            model,
            data,
            schema,
            worth_model,
            mape_denominator,
            top,
            format,
            out,
        } => commands::evaluate(commands::EvaluateArgs {
            model: &model,
            data: &data,
            schema: &schema,
            worth_model: worth_model.as_deref(),
            denominator: mape_denominator.unwrap_or_default(),
            top,
            format: format.unwrap_or(Format::Text),
            out: out.as_deref(),
        }),
        Command::Pipeline {
            train_data,
            score_data,
            schema,
            score_schema,
            config,
            model,
            format,
            top,
            out,
        } => commands::pipeline(commands::PipelineArgs {
            train_data: &train_data,
            score_data: &score_data,
            schema: &schema,
            score_schema: score_schema.as_deref(),
            config: config.as_deref(),
            model: &model,
            format,
            top,
            out: &out,
        }),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let input = err
                .chain()
                .find_map(|e| e.downcast_ref::<edumine::Error>())
                .is_some_and(edumine::Error::is_input_error);
            ExitCode::from(if input { 2 } else { 1 })
        }
    }
}
