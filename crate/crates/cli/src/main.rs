use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use gluekit::arith::{q, q_frac, Q};
use gluekit::completion::{torsion_split, CompletionModel};
use gluekit::format::{parse_datum, parse_module, parse_poly_over, parse_triple, Report};
use gluekit::models::{
    gl_point, iwahori_membership, neron_gm_triple, neron_iso_test, specialize_point, two_disks_triple,
    unit_circle_triple,
};
use gluekit::module::{check_iso, glue_module, is_vector_bundle_glued, random_module, round_trip_auto};
use gluekit::triple::{reconstruct_global_sections, AffineGluingTriple, Classification, GluedRingResult};
use gluekit::{AffineAlgebra, BasePair, GlueError, IdealPresentation, PolyRing, Regime};

const EXIT_NEGATIVE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_PARSE: u8 = 64;

#[derive(Parser)]
#[command(name = "gluekit", version, about = "Gluing of rings and modules along pi-adic completions")]
struct Cli {
    #[arg(long, global = true, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    prec: u32,
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    degree_bound: u32,
    #[arg(long, global = true, default_value = "Zp(5)")]
    profile: String,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Report,
}

#[derive(Subcommand)]
enum Command {
    /// Present the pullback ring of a triple and verify it
    GlueRing(TripleInput),
    /// Glue a module datum, or round-trip a module block
    GlueModule { file: String },
    /// Check that the generic fiber has dense image
    CheckDense(TripleInput),
    /// Classify a triple as affine, not affine or inconclusive
    Classify(TripleInput),
    /// Reduce a matrix in GL_n mod p and test Iwahori membership
    Specialize {
        /// Rows separated by ';', entries by ',', e.g. "1,5;1,1"
        #[arg(long)]
        matrix: String,
    },
    /// Run the fixture catalog
    VerifyExamples,
    /// Reduced Gröbner basis of an ideal
    Groebner {
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[arg(long, value_enum, default_value_t = RegimeArg::R)]
        regime: RegimeArg,
        polys: Vec<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    /// over R
    R,
    /// over R[1/pi]
    Q,
    /// over R/pi^prec
    Mod,
}

#[derive(clap::Args)]
struct TripleInput {
    /// A file holding a triple block
    file: Option<String>,
    /// A built-in fixture: two-disks or unit-circle
    #[arg(long, conflicts_with = "file")]
    fixture: Option<String>,
}

struct Outcome {
    report: Report,
    text: Vec<String>,
    code: u8,
}

impl Outcome {
    fn new(kind: &str) -> Self {
        Outcome { report: Report::new(kind), text: vec![], code: 0 }
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string();
        self.text.push(format!("{key}: {v}"));
        self.report.push(key, v);
    }
}

fn exit_code(e: &GlueError) -> u8 {
    match e {
        GlueError::Parse { .. } => EXIT_PARSE,
        GlueError::IncompatibleDatum(_) | GlueError::VerificationFailed { .. } | GlueError::NotIntegral(_) => {
            EXIT_NEGATIVE
        }
        GlueError::SearchExhausted { .. }
        | GlueError::DegreeBoundInconclusive(_)
        | GlueError::PrecisionLoss(_)
        | GlueError::CapExceeded { .. } => EXIT_INCONCLUSIVE,
        _ => 1,
    }
}

fn fixture_prime(base: &BasePair) -> Result<u64, GlueError> {
    let p = base.prime()?;
    u64::try_from(p.clone()).map_err(|_| GlueError::Invalid(format!("prime {p} too large for fixtures")))
}

fn load_triple(input: &TripleInput, base: &BasePair, prec: u32) -> Result<AffineGluingTriple, GlueError> {
    match (&input.fixture, &input.file) {
        (Some(name), _) => match name.as_str() {
            "two-disks" => two_disks_triple(fixture_prime(base)?),
            "unit-circle" => unit_circle_triple(fixture_prime(base)?),
            other => Err(GlueError::Invalid(format!("no triple fixture named '{other}'"))),
        },
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| GlueError::Invalid(format!("{path}: {e}")))?;
            parse_triple(&text, prec)
        }
        (None, None) => Err(GlueError::Invalid("give a triple file or --fixture".into())),
    }
}

fn describe(out: &mut Outcome, t: &AffineGluingTriple, r: &GluedRingResult) {
    let names = r.names();
    out.put("generators", r.generators.len());
    for (n, g) in names.iter().zip(&r.generators) {
        let a = if g.is_torsion() { "0".into() } else { t.a.display(&g.a) };
        out.put(&format!("generator {n}"), format!("{a} [{}]", g.label));
    }
    out.put("relations", r.relations.generators().len());
    for (i, rel) in r.relations.generators().iter().enumerate() {
        out.put(&format!("relation {}", i + 1), rel.display(&names));
    }
    for (i, c) in r.checks.iter().enumerate() {
        out.put(&format!("check {}", i + 1), c);
    }
}

fn classify(out: &mut Outcome, t: &AffineGluingTriple, cli: &Cli) -> Result<(), GlueError> {
    out.put("triple", &t.name);
    out.put("base", &t.a.base().description);
    out.put("prec", cli.prec);
    out.put("degree-bound", cli.degree_bound);
    match t.classify(cli.prec, cli.degree_bound)? {
        Classification::Affine(r) => {
            out.put("status", "affine");
            describe(out, t, &r);
        }
        Classification::NotAffine { tag, witness } => {
            out.put("status", "not-affine");
            out.put("reason", tag);
            out.put("witness", witness);
            out.code = EXIT_NEGATIVE;
        }
        Classification::Inconclusive(why) => {
            out.put("status", "inconclusive");
            out.put("reason", why);
            out.code = EXIT_INCONCLUSIVE;
        }
    }
    Ok(())
}

fn run(cli: &Cli, base: &BasePair) -> Result<Outcome, GlueError> {
    match &cli.command {
        Command::GlueRing(input) => {
            let t = load_triple(input, base, cli.prec)?;
            let mut out = Outcome::new("glue-ring");
            classify(&mut out, &t, cli)?;
            Ok(out)
        }
        Command::Classify(input) => {
            let t = load_triple(input, base, cli.prec)?;
            let mut out = Outcome::new("classify");
            classify(&mut out, &t, cli)?;
            out.report.entries.retain(|(k, _)| !k.starts_with("generator ") && !k.starts_with("relation ") && !k.starts_with("check "));
            out.text.retain(|l| !l.starts_with("generator ") && !l.starts_with("relation ") && !l.starts_with("check "));
            Ok(out)
        }
        Command::CheckDense(input) => {
            let t = load_triple(input, base, cli.prec)?;
            let mut out = Outcome::new("check-dense");
            out.put("triple", &t.name);
            let d = t.dense_image_check(cli.prec, cli.degree_bound)?;
            out.put("dense", d.dense);
            out.put("levels", d.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","));
            if let Some(w) = d.witness {
                out.put("witness", w);
                out.code = EXIT_NEGATIVE;
            }
            Ok(out)
        }
        Command::GlueModule { file } => {
            let text = fs::read_to_string(file).map_err(|e| GlueError::Invalid(format!("{file}: {e}")))?;
            let mut out = Outcome::new("glue-module");
            if text.trim_start().starts_with("datum") {
                let d = parse_datum(&text)?;
                let g = glue_module(&d)?;
                out.put("presentation", g.module.display());
                out.put("torsion-exponent", g.torsion_exponent);
                out.put("bundle", format!("{:?}", is_vector_bundle_glued(&d)?));
            } else {
                let m = parse_module(&text)?;
                let (g, cert) = round_trip_auto(&m)?;
                out.put("presentation", g.module.display());
                let ok = check_iso(&m, &g.module, &cert)?;
                out.put("round-trip", if ok { "certified" } else { "failed" });
                if !ok {
                    out.code = EXIT_NEGATIVE;
                }
            }
            Ok(out)
        }
        Command::Specialize { matrix } => {
            let rows: Vec<Vec<Q>> = matrix
                .split(';')
                .map(|r| r.split(',').map(|c| parse_poly_over(c, base, &[]).map(|f| f.constant_term())).collect())
                .collect::<Result<_, _>>()?;
            let p = fixture_prime(base)?;
            let mut out = Outcome::new("specialize");
            out.put("iwahori", iwahori_membership(p, &rows)?);
            let pt = gl_point(p, &rows)?;
            let s = specialize_point(&pt)?;
            let n = rows.len();
            let red: Vec<String> =
                s[..n * n].chunks(n).map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")).collect();
            out.put("reduction", red.join(";"));
            Ok(out)
        }
        Command::Groebner { vars, regime, polys } => {
            let regime = match regime {
                RegimeArg::R => Regime::OverR,
                RegimeArg::Q => Regime::OverRInvPi,
                RegimeArg::Mod => Regime::OverRModPiN(cli.prec),
            };
            let gens = polys.iter().map(|s| parse_poly_over(s, base, vars)).collect::<Result<Vec<_>, _>>()?;
            let ring = PolyRing::from_names(base.clone(), regime, vars.clone());
            let ideal = IdealPresentation::new(ring.clone(), gens)?;
            let mut out = Outcome::new("groebner");
            out.put("regime", regime.tag());
            for (i, g) in ideal.groebner()?.iter().enumerate() {
                out.put(&format!("basis {}", i + 1), ring.display(g));
            }
            Ok(out)
        }
        Command::VerifyExamples => verify_examples(cli, base),
    }
}

fn seed() -> Result<u64, GlueError> {
    match std::env::var("GLUEKIT_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| GlueError::Parse {
            line: 1,
            column: 1,
            message: format!("GLUEKIT_SEED must be a decimal integer, got '{s}'"),
        }),
        Err(_) => Ok(0),
    }
}

enum Status {
    Pass,
    Fail(String),
    Inconclusive(String),
}

fn status_of(r: Result<bool, GlueError>) -> Status {
    match r {
        Ok(true) => Status::Pass,
        Ok(false) => Status::Fail("unexpected result".into()),
        Err(e) if exit_code(&e) == EXIT_INCONCLUSIVE => Status::Inconclusive(e.to_string()),
        Err(e) => Status::Fail(e.to_string()),
    }
}

fn verify_examples(cli: &Cli, base: &BasePair) -> Result<Outcome, GlueError> {
    let p = fixture_prime(base)?;
    let seed = seed()?;
    let (prec, bound) = (cli.prec, cli.degree_bound);
    type Fixture<'a> = (&'a str, Box<dyn Fn() -> Result<bool, GlueError> + 'a>);
    let fixtures: Vec<Fixture> = vec![
        ("bl-round-trip", Box::new(move || {
            for s in 0..20 {
                let m = random_module(base, seed.wrapping_add(s), s % 2 == 0)?;
                let (g, cert) = round_trip_auto(&m)?;
                if !check_iso(&m, &g.module, &cert)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })),
        ("global-sections", Box::new(move || {
            let ring = PolyRing::new(base.clone(), Regime::OverR, &["x"]);
            let x = ring.var("x").expect("declared");
            for rels in [vec![], vec![x.scale(&q(p as i64))]] {
                reconstruct_global_sections(&AffineAlgebra::new(ring.clone(), rels)?, prec, bound)?;
            }
            Ok(true)
        })),
        ("iwahori-demo", Box::new(move || {
            let m = |a: [i64; 4]| vec![vec![q(a[0]), q(a[1])], vec![q(a[2]), q(a[3])]];
            let pi = p as i64;
            Ok(iwahori_membership(p, &m([1, pi, 1, 1]))?
                && !iwahori_membership(p, &m([1, 1, pi, 1]))?
                && specialize_point(&gl_point(p, &m([1, pi, 1, 1]))?)?[..4] == [1, 0, 1, 1])
        })),
        ("neron-gm", Box::new(|| {
            let t = |n, d| neron_gm_triple(q_frac(n, d));
            Ok(neron_iso_test(&t(1, 1)?, &t(1, 1)?) && !neron_iso_test(&t(1, 1)?, &t(1, 2)?))
        })),
        ("torsion-split", Box::new(move || {
            let ring = PolyRing::new(base.clone(), Regime::OverR, &["y"]);
            let y = ring.var("y").expect("declared");
            for (k, n0) in [(None, 0u32), (Some(1u32), 1), (Some(2), 2)] {
                let rels = k.map(|k| vec![y.scale(&q((p as i64).pow(k)))]).unwrap_or_default();
                let s = torsion_split(&CompletionModel::new(AffineAlgebra::new(ring.clone(), rels)?)?, 2 * n0 + 4)?;
                if s.n0 != n0 {
                    return Ok(false);
                }
            }
            Ok(true)
        })),
        ("two-disks", Box::new(move || {
            let t = two_disks_triple(p)?;
            let r = t.glue_ring(prec, bound)?;
            t.verify_glued(&r)?;
            Ok(true)
        })),
        ("unit-circle", Box::new(move || {
            let t = unit_circle_triple(p)?;
            Ok(matches!(t.classify(prec, bound)?, Classification::NotAffine { .. }))
        })),
    ];
    let mut out = Outcome::new("verify-examples");
    out.put("seed", seed);
    let (mut failed, mut open) = (false, false);
    for (name, run) in &fixtures {
        let start = Instant::now();
        let status = status_of(run());
        let ms = start.elapsed().as_millis();
        let (word, detail) = match &status {
            Status::Pass => ("pass", String::new()),
            Status::Fail(w) => {
                failed = true;
                ("fail", w.clone())
            }
            Status::Inconclusive(w) => {
                open = true;
                ("inconclusive", w.clone())
            }
        };
        let value = if detail.is_empty() { word.to_string() } else { format!("{word} ({detail})") };
        out.report.push(&format!("fixture {name}"), &value);
        out.text.push(format!("{name:<16} {value:<12} {ms} ms"));
    }
    out.code = if failed { EXIT_NEGATIVE } else if open { EXIT_INCONCLUSIVE } else { 0 };
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let base = match BasePair::parse(&cli.profile) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    match run(&cli, &base) {
        Ok(out) => {
            match cli.format {
                Format::Text => {
                    for l in &out.text {
                        println!("{l}");
                    }
                }
                Format::Report => print!("{}", out.report.render()),
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            match cli.format {
                Format::Text => eprintln!("error: {e}"),
                Format::Report => {
                    let mut r = Report::new("error");
                    r.push("error", &e);
                    print!("{}", r.render());
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
