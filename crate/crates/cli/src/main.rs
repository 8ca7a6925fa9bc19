use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fbtables::tables::{self, with_workers};
use fbtables::{ClosedForm, Domain, FieldSpec, SBox, Spectrum, TableKind, Verifier};
use serde_json::json;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Table,
    Entry,
    Spectrum,
    Uniformity,
    Verify,
    Classify,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// Closed form against brute force, cell by cell.
    Entrywise,
    /// Closed-form spectra and uniformities against brute force.
    Spectra,
    /// Properties every S-box satisfies.
    Structural,
}

/// Differential and Feistel boomerang tables of S-boxes over GF(2^n).
#[derive(Parser, Debug)]
#[command(name = "fbtables", version)]
struct Args {
    /// Field degree n.
    #[arg(long)]
    n: u32,

    /// Defining polynomial as a hexadecimal coefficient vector, e.g. 0x13.
    #[arg(long, value_parser = parse_hex)]
    modulus: Option<u64>,

    /// `paper` for x^(2^(m+1)-1), `power:<d>` for x^d, `lut:<path>` for a lookup table file.
    #[arg(long, default_value = "paper")]
    sbox: String,

    #[arg(long, value_enum)]
    command: Command,

    /// One of ddt, bct, fbct, fbdt, fbet.
    #[arg(long)]
    table: Option<TableKind>,

    /// Comma-separated coordinates for entry/classify, hex (0x..) or decimal.
    #[arg(long, value_delimiter = ',', value_parser = parse_int)]
    coords: Vec<u32>,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for sampled zero checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value = "entrywise")]
    suite: Suite,

    /// Predicted-zero tuples sampled when a sweep is too large.
    #[arg(long, default_value_t = fbtables::verify::DEFAULT_ZERO_SAMPLES)]
    samples: usize,
}

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| format!("bad hex value {s:?}: {e}"))
}

fn parse_int(s: &str) -> Result<u32, String> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u32::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("bad coordinate {s:?}: {e}"))
}

/// A failed run: exit 1 for a verification mismatch, exit 2 otherwise.
enum Failure {
    Usage(String),
    Mismatch(String),
}

impl From<fbtables::Error> for Failure {
    fn from(e: fbtables::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn build_sbox(spec: &FieldSpec, source: &str) -> Result<SBox, Failure> {
    if source == "paper" {
        return Ok(SBox::closed_form_map(spec));
    }
    if let Some(d) = source.strip_prefix("power:") {
        let d: u64 = d
            .parse()
            .map_err(|e| Failure::Usage(format!("bad exponent {d:?}: {e}")))?;
        return Ok(SBox::power(spec, d)?);
    }
    if let Some(path) = source.strip_prefix("lut:") {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?;
        return Ok(SBox::parse_lut(spec, &text)?);
    }
    usage(format!(
        "unknown S-box source {source:?}; expected paper, power:<d> or lut:<path>"
    ))
}

fn require_table(args: &Args) -> Result<TableKind, Failure> {
    args.table
        .ok_or_else(|| Failure::Usage(format!("--table is required for {:?}", args.command)))
}

fn coords_for(args: &Args, kind: TableKind) -> Result<Vec<u32>, Failure> {
    if args.coords.len() != kind.arity() {
        return usage(format!(
            "{kind} takes {} coordinates, got {}",
            kind.arity(),
            args.coords.len()
        ));
    }
    Ok(args.coords.clone())
}

fn hex_list(coords: &[u32]) -> String {
    coords
        .iter()
        .map(|c| format!("{c:#x}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn render_spectrum(s: &Spectrum, format: Format) -> String {
    match format {
        Format::Json => s.to_json() + "\n",
        Format::Text => format!("{s}\n"),
        Format::Csv => {
            let mut out = String::from("value,multiplicity\n");
            for (v, k) in s.iter() {
                out.push_str(&format!("{v},{k}\n"));
            }
            out
        }
    }
}

fn table_output(args: &Args, s: &SBox, kind: TableKind) -> Result<String, Failure> {
    tables::check_budget(kind, s.n(), kind.arity() > 2)?;
    let json = |v: serde_json::Value| v.to_string() + "\n";
    Ok(match kind {
        TableKind::Fbdt | TableKind::Fbet => {
            let t = if kind == TableKind::Fbdt {
                tables::fbdt_table(s)
            } else {
                tables::fbet_table(s)
            };
            match args.format {
                Format::Csv => t.to_csv(),
                Format::Json => json(serde_json::to_value(&t).expect("table serializes")),
                Format::Text => t
                    .iter()
                    .map(|(c, v)| format!("({}) {v}\n", hex_list(&c)))
                    .collect(),
            }
        }
        _ => {
            let t = match kind {
                TableKind::Ddt => tables::ddt(s),
                TableKind::Bct => tables::bct(s)?,
                _ => tables::fbct(s),
            };
            match args.format {
                Format::Csv => t.to_csv(),
                Format::Json => json(serde_json::to_value(&t).expect("table serializes")),
                Format::Text => t.to_text(),
            }
        }
    })
}

fn spectrum_of(s: &SBox, kind: TableKind) -> Result<(Spectrum, u32), Failure> {
    tables::check_budget(kind, s.n(), false)?;
    Ok(match kind {
        TableKind::Ddt => (tables::ddt_spectrum(s), tables::differential_uniformity(s)),
        TableKind::Bct => {
            let t = tables::bct(s)?;
            let u = t.max_where(|a, b| a != 0 && b != 0);
            (t.spectrum(Domain::Pairs), u)
        }
        TableKind::Fbct => {
            let t = tables::fbct(s);
            let u = t.max_where(|a, b| a != 0 && b != 0 && a != b);
            (t.spectrum(Domain::Pairs), u)
        }
        TableKind::Fbdt => {
            let p = tables::fbdt_summary(s);
            (p.spectrum, p.uniformity)
        }
        TableKind::Fbet => {
            let p = tables::fbet_summary(s);
            (p.spectrum, p.uniformity)
        }
    })
}

fn entry_output(args: &Args, s: &SBox, kind: TableKind, classify: bool) -> Result<String, Failure> {
    let coords = coords_for(args, kind)?;
    let brute = tables::entry(s, kind, &coords)?;
    let closed = if s.is_closed_form_map() && kind != TableKind::Bct {
        Some(ClosedForm::new(s.spec()).entry(kind, &coords)?)
    } else if classify {
        return usage("classify needs --sbox paper and a table other than bct");
    } else {
        None
    };
    Ok(match args.format {
        Format::Json => {
            let v = json!({
                "table": kind,
                "coords": coords.iter().map(|c| format!("{c:#x}")).collect::<Vec<_>>(),
                "brute_force": brute,
                "closed_form": closed,
            });
            v.to_string() + "\n"
        }
        Format::Csv => {
            let mut out = String::from("table,coords,brute_force,closed_form,case\n");
            let (p, case) = closed.as_ref().map_or((String::new(), String::new()), |c| {
                (c.predicted.to_string(), format!("\"{}\"", c.case_label))
            });
            out.push_str(&format!(
                "{kind},\"{}\",{brute},{p},{case}\n",
                hex_list(&coords)
            ));
            out
        }
        Format::Text => {
            let mut out = format!("{kind}({}) = {brute}", hex_list(&coords));
            match &closed {
                Some(c) if classify => {
                    out.push('\n');
                    out.push_str(&format!("case: {}\n", c.case_label));
                    if let Some(t) = c.t {
                        out.push_str(&format!("t: {t:#x}\n"));
                    }
                    if let Some(t2) = c.t2 {
                        out.push_str(&format!("t2: {t2:#x}\n"));
                    }
                    out.push_str(&format!("closed form: {}\n", c.predicted));
                    out.push_str(&format!("brute force: {brute}\n"));
                }
                Some(c) => {
                    out.push_str(&format!(
                        "  closed form {} [{}]\n",
                        c.predicted, c.case_label
                    ));
                }
                None => out.push('\n'),
            }
            out
        }
    })
}

fn verify_output(args: &Args, s: &SBox) -> Result<(String, bool), Failure> {
    let verifier = Verifier {
        seed: args.seed,
        zero_samples: args.samples,
        ..Verifier::default()
    };
    let spec = s.spec();
    let needs_paper = || {
        if s.is_closed_form_map() {
            Ok(())
        } else {
            usage(format!(
                "the {:?} suite runs on --sbox paper only",
                args.suite
            ))
        }
    };
    let mut report = match args.suite {
        Suite::Entrywise => {
            needs_paper()?;
            let kind = require_table(args)?;
            if kind == TableKind::Bct {
                return usage("bct has no closed form to verify");
            }
            verifier.entrywise(spec, kind)?
        }
        Suite::Spectra => {
            needs_paper()?;
            match args.table {
                Some(TableKind::Bct) => return usage("bct has no closed form to verify"),
                Some(kind) => verifier.spectra_for(spec, &[kind])?,
                None => verifier.spectra(spec)?,
            }
        }
        Suite::Structural => verifier.structural(s),
    };
    if let Some(secs) = report.elapsed.take() {
        eprintln!("elapsed {secs:.3}s");
    }
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Text => report.to_text(),
        Format::Csv => return usage("verify reports are text or json"),
    };
    Ok((text, report.passed))
}

fn run(args: &Args) -> Result<String, Failure> {
    let spec = match args.modulus {
        Some(m) => FieldSpec::with_modulus(args.n, m)?,
        None => FieldSpec::new(args.n)?,
    };
    let s = build_sbox(&spec, &args.sbox)?;
    match args.command {
        Command::Table => table_output(args, &s, require_table(args)?),
        Command::Entry => entry_output(args, &s, require_table(args)?, false),
        Command::Classify => entry_output(args, &s, require_table(args)?, true),
        Command::Spectrum => {
            let (spectrum, _) = spectrum_of(&s, require_table(args)?)?;
            Ok(render_spectrum(&spectrum, args.format))
        }
        Command::Uniformity => {
            let kind = require_table(args)?;
            let (_, u) = spectrum_of(&s, kind)?;
            Ok(match args.format {
                Format::Json => json!({ "table": kind, "uniformity": u }).to_string() + "\n",
                Format::Csv => format!("table,uniformity\n{kind},{u}\n"),
                Format::Text => format!("{u}\n"),
            })
        }
        Command::Verify => {
            let (text, passed) = verify_output(args, &s)?;
            if passed {
                Ok(text)
            } else {
                Err(Failure::Mismatch(text))
            }
        }
    }
}

fn emit(args: &Args, text: &str) -> Result<(), String> {
    match &args.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = with_workers(args.workers, || run(&args));
    let (text, code) = match result {
        Ok(text) => (text, 0),
        Err(Failure::Mismatch(text)) => (text, 1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = emit(&args, &text) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
