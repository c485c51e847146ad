use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use affine_glue::embedder::{affinize, BuildOptions, EmbedError};
use affine_glue::fixtures;
use affine_glue::io::{
    document_to_embedding, document_to_unbounded, embedding_to_document, parse_embedding,
    parse_instance, render_embedding, render_instance, Instance,
};
use affine_glue::neighborhood::shadow_set;
use affine_glue::oracle::{brute_force_shadows, verify_homeomorphism};
use affine_glue::scalar::Scalar;
use affine_glue::space::validate;
use affine_glue::unbounded::{affinize_unbounded, validate_rays, verify_properness, UnboundedError};
use affine_glue::verifier::check_criterion;

/// Decides affineness of one-dimensional glued PL spaces and constructs
/// certified affine embeddings.
#[derive(Parser)]
#[command(name = "affine-glue", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate an instance and decide the affineness criterion.
    Check { file: PathBuf },
    /// Construct the affine embedding and write the embedding document.
    Embed {
        file: PathBuf,
        /// Output path; `-` writes to stdout.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare the direct shadow set of a point with the brute-force
    /// shrinking-neighborhood computation.
    Shadows {
        file: PathBuf,
        #[arg(long)]
        point: String,
    },
    /// Check an embedding document against its instance by exact sampling.
    Verify {
        instance: PathBuf,
        embedding: PathBuf,
        /// Samples per segment of every map piece.
        #[arg(long, default_value_t = 12)]
        density: usize,
    },
    /// Print a built-in demo instance.
    Demo { name: String },
}

fn read_input(path: &Path) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("stdin: {e}"))?;
        return Ok(buf);
    }
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text = read_input(path)?;
    let (inst, warnings) = parse_instance(&text).map_err(|e| e.to_string())?;
    for w in warnings {
        eprintln!("note: {w}");
    }
    Ok(inst)
}

const OK: u8 = 0;
const REJECTED: u8 = 1;
const MALFORMED: u8 = 2;

fn run_check(file: &Path) -> Result<u8, String> {
    let inst = load_instance(file)?;
    let mut code = OK;
    let report = validate(inst.core());
    for v in &report.violations {
        println!("invalid {} [{}]: {}", v.subject, v.code, v.detail);
    }
    if !report.ok() {
        return Ok(REJECTED);
    }
    if let Instance::Unbounded(ext) = &inst {
        let ray_violations = validate_rays(ext);
        for v in &ray_violations {
            println!("invalid {} [{}]: {}", v.subject, v.code, v.detail);
        }
        if !ray_violations.is_empty() {
            return Ok(REJECTED);
        }
    }
    let criterion = check_criterion(inst.core()).map_err(|e| e.to_string())?;
    for (id, b) in &criterion.branch_counts {
        println!("branches {id}: {b}");
    }
    println!("K: {}", criterion.k);
    if criterion.accepted {
        println!("accepted");
    } else {
        for v in &criterion.violations {
            println!("rejected {} [{}]: {}", v.subject, v.code, v.detail);
        }
        code = REJECTED;
    }
    Ok(code)
}

fn embed_failure(e: &str) -> Result<u8, String> {
    println!("rejected: {e}");
    Ok(REJECTED)
}

fn run_embed(file: &Path, output: &Path) -> Result<u8, String> {
    let inst = load_instance(file)?;
    let opts = BuildOptions::default();
    let doc = match &inst {
        Instance::Bounded(sp) => match affinize(sp, &opts) {
            Ok(emb) => embedding_to_document(&emb),
            Err(e @ (EmbedError::Validation(_) | EmbedError::Rejected(_))) => {
                return embed_failure(&e.to_string())
            }
            Err(e) => return Err(e.to_string()),
        },
        Instance::Unbounded(ext) => match affinize_unbounded(ext, &opts) {
            Ok(emb) => affine_glue::io::unbounded_to_document(&emb),
            Err(
                e @ (UnboundedError::Validation(_)
                | UnboundedError::Embed(EmbedError::Validation(_) | EmbedError::Rejected(_))),
            ) => return embed_failure(&e.to_string()),
            Err(e) => return Err(e.to_string()),
        },
    };
    let rendered = render_embedding(&doc);
    if output.as_os_str() == "-" {
        print!("{rendered}");
    } else {
        std::fs::write(output, rendered).map_err(|e| format!("{}: {e}", output.display()))?;
        eprintln!("wrote {}", output.display());
    }
    Ok(OK)
}

fn run_shadows(file: &Path, point: &str) -> Result<u8, String> {
    let inst = load_instance(file)?;
    let space = inst.core();
    if space.point(point).is_none() {
        return Err(format!("unknown point {point:?}"));
    }
    let direct = shadow_set(space, point).map_err(|e| e.to_string())?;
    let brute = brute_force_shadows(space, point, &Scalar::ratio(1, 2), 12)
        .map_err(|e| e.to_string())?;
    println!("direct: {direct:?}");
    println!("brute-force: {brute:?}");
    if direct == brute {
        println!("agree");
        Ok(OK)
    } else {
        println!("disagree");
        Ok(REJECTED)
    }
}

fn run_verify(instance: &Path, embedding: &Path, density: usize) -> Result<u8, String> {
    let inst = load_instance(instance)?;
    let text = read_input(embedding)?;
    let doc = parse_embedding(&text).map_err(|e| e.to_string())?;
    let violations = match &inst {
        Instance::Bounded(sp) => {
            let emb = document_to_embedding(sp, &doc).map_err(|e| e.to_string())?;
            verify_homeomorphism(&emb, density)
        }
        Instance::Unbounded(ext) => {
            let emb = document_to_unbounded(ext, &doc).map_err(|e| e.to_string())?;
            let mut v = verify_homeomorphism(&emb.core, density);
            v.extend(verify_properness(&emb, &[10, 100, 1000]));
            v
        }
    };
    for v in &violations {
        println!("fail {} [{}]: {}", v.subject, v.code, v.detail);
    }
    if violations.is_empty() {
        println!("verified");
        Ok(OK)
    } else {
        Ok(REJECTED)
    }
}

fn run_demo(name: &str) -> Result<u8, String> {
    match fixtures::demo(name) {
        Some(inst) => {
            print!("{}", render_instance(&inst));
            Ok(OK)
        }
        None => Err(format!(
            "unknown demo {name:?}; available: {}",
            fixtures::demo_names().join(", ")
        )),
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("AFFINE_GLUE_THREADS") {
        match v.parse::<usize>() {
            Ok(t) if t >= 1 => {} // computation is sequential; any cap >= 1 holds
            _ => {
                eprintln!("error: AFFINE_GLUE_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(MALFORMED);
            }
        }
    }
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Check { file } => run_check(file),
        Cmd::Embed { file, output } => run_embed(file, output),
        Cmd::Shadows { file, point } => run_shadows(file, point),
        Cmd::Verify {
            instance,
            embedding,
            density,
        } => run_verify(instance, embedding, *density),
        Cmd::Demo { name } => run_demo(name),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(MALFORMED)
        }
    }
}
