//! Argument parsing and dispatch for the `permsys` binary. [`run`] writes
//! records to any `Write` so the commands can be driven from tests.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use permsys::binomial::{self, BinomialError, ExtKind, QuadExt, Reading};
use permsys::conjecture::{self, ProbeRecord, Sampler};
use permsys::homog3::{classify_t32_with, irreducibility_criterion, Certificate, ClassVerdict, DrsTable, Homog3Error, HomogSystem, HomogCase};
use permsys::permoracle::{brute_force_with, hermite_check_with, OracleError, PermVerdict, Witness, DEFAULT_BUDGET};
use permsys::quadclass::{canonical_form, CanonicalClass, ClassifyError, QuadCoeffs, QuadVerdict};
use permsys::sweep::{self, Homog3Row, QuadRow};
use permsys::text::parse_system;
use permsys::{verify_witness, EquivError, EquivWitness, Exec, Field, FieldConfig, FieldElem, GfError, PolyError};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const BUDGET_ENV: &str = "PERMSYS_BUDGET";

/// Ranks evaluated per batch in exhaustive scans; bounds memory, not output.
const BATCH: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Homog3(#[from] Homog3Error),
    #[error(transparent)]
    Binomial(#[from] BinomialError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(name = "permsys", version, about = "Permutation polynomial systems over small finite fields")]
pub struct Cli {
    /// Field as `q`, `p^m` or `p^m:c0,c1,...,cm` (modulus constant term first).
    #[arg(long, global = true, conflicts_with = "field_config")]
    pub field: Option<FieldConfig>,
    /// TOML file with keys `p`, `m`, `modulus`.
    #[arg(long, global = true)]
    pub field_config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs the sequential path.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SamplerArg {
    Dense,
    Planted,
    Mixed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Brute-force permutation test.
    CheckPerm {
        #[arg(long)]
        system: String,
    },
    /// Hermite's criterion, cross-checked against brute force.
    Hermite {
        #[arg(long)]
        system: String,
    },
    /// Classify `(a1 x^2 + a2 xy + a3 y^2 + a4 x + a5 y, b1 x^2 + ...)`.
    ClassifyQuad {
        /// a1,a2,a3,a4,a5,b1,b2,b3,b4,b5
        #[arg(long)]
        coeffs: String,
    },
    ScanQuad {
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Classify `(a1 x^3 + a2 x^2 y + a3 x y^2, b2 x^2 y + b3 x y^2 + b4 y^3)`.
    ClassifyHomog3 {
        /// a1,a2,a3,b2,b3,b4
        #[arg(long)]
        coeffs: String,
    },
    /// Every system with `a1 b4 != 0`.
    ScanHomog3 {
        #[arg(long)]
        exhaustive: bool,
    },
    /// All `a` in F_{q^2} for `x^3 + a x^{2q+1}`.
    ScanBinomial {
        /// Require characteristic 2.
        #[arg(long)]
        even: bool,
        /// Tie `a2` to `u = (sigma - 3) s^2` in case 2.1.
        #[arg(long = "p310-21-strict")]
        strict: bool,
    },
    /// Replay a witness chain from one system and compare with another.
    VerifyEquiv {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Witness JSON, inline or `@path`.
        #[arg(long)]
        witness: String,
    },
    /// Search for quadratic permutations of F_q^n without a witness to the identity.
    ConjectureScan {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 10_000, conflicts_with = "restricted")]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SamplerArg::Mixed)]
        sampler: SamplerArg,
        /// Every system `x_i + c_i m_i` instead of sampling.
        #[arg(long)]
        restricted: bool,
    },
}

/// Records written and whether any of them is a disagreement or red flag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub records: u64,
    pub red: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.red)
    }
}

struct Sink<'a> {
    w: &'a mut dyn Write,
    outcome: Outcome,
}

impl Sink<'_> {
    fn emit(&mut self, v: &Value, red: bool) -> Result<(), CliError> {
        serde_json::to_writer(&mut *self.w, v)?;
        self.w.write_all(b"\n")?;
        self.outcome.records += 1;
        self.outcome.red |= red;
        Ok(())
    }
}

pub fn budget() -> Result<u64, CliError> {
    match std::env::var(BUDGET_ENV) {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(b) if b > 0 => Ok(b),
            _ => Err(CliError::Usage(format!("{BUDGET_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

impl Cli {
    pub fn field(&self) -> Result<Arc<Field>, CliError> {
        let cfg = match (&self.field, &self.field_config) {
            (Some(c), _) => c.clone(),
            (None, Some(path)) => FieldConfig::from_toml(&std::fs::read_to_string(path)?)?,
            (None, None) => return Err(CliError::Usage("--field or --field-config is required".into())),
        };
        Ok(cfg.build()?)
    }

    pub fn exec(&self) -> Exec {
        if self.workers == Some(1) {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

fn parse_coeffs(f: &Field, s: &str, n: usize) -> Result<Vec<FieldElem>, CliError> {
    let c = s.split(',').map(|t| f.parse_elem(t)).collect::<Result<Vec<_>, _>>()?;
    if c.len() != n {
        return Err(CliError::Usage(format!("expected {n} coefficients, got {}", c.len())));
    }
    Ok(c)
}

fn elems(f: &Field, e: &[FieldElem]) -> Value {
    Value::Array(e.iter().map(|&x| f.elem_json(x)).collect())
}

fn perm_json(f: &Field, v: &PermVerdict) -> Value {
    let witness = match &v.witness {
        None => Value::Null,
        Some(Witness::Collision { first, second }) => json!({ "collision": [elems(f, first), elems(f, second)] }),
        Some(Witness::HermiteTuple(t)) => json!({ "hermite_tuple": t }),
    };
    json!({ "is_perm": v.is_perm, "witness": witness })
}

fn class_json(f: &Field, c: &CanonicalClass) -> Value {
    match c {
        CanonicalClass::Mixed { c: cs } => json!({ "class": c.label(), "c": elems(f, cs) }),
        other => json!({ "class": other.label() }),
    }
}

fn quad_json(f: &Field, coeffs: &QuadCoeffs, v: &Result<QuadVerdict, ClassifyError>, oracle: bool, full: bool) -> (Value, bool) {
    let mut rec = json!({ "coeffs": elems(f, &coeffs.to_vec()), "oracle": oracle });
    let agree = match v {
        Ok(v) => {
            rec["is_perm"] = json!(v.is_perm);
            rec["case"] = json!(v.case.to_string());
            rec["canonical"] = v.canonical.as_ref().map_or(Value::Null, |c| class_json(f, c));
            if full {
                rec["symmetry"] = json!(v.symmetry);
                rec["witness"] = v.witness.to_json(f);
                rec["collision"] = v.collision.as_ref().map_or(Value::Null, |(a, b)| json!([elems(f, a), elems(f, b)]));
                rec["linearized"] = v.linearized.as_ref().map_or(Value::Null, |l| elems(f, l));
            }
            v.is_perm == oracle
        }
        Err(e) => {
            rec["error"] = json!(e.to_string());
            false
        }
    };
    rec["agree"] = json!(agree);
    (rec, !agree)
}

fn homog_verdict_json(f: &Field, v: &ClassVerdict) -> Value {
    let case = match &v.case {
        HomogCase::Proportional { k } => json!({ "proportional": f.elem_json(*k) }),
        HomogCase::RationalPermutation => json!("rational_permutation"),
        HomogCase::NotPermutation(r) => json!({ "not_permutation": r.to_string() }),
    };
    let certificate = match &v.certificate {
        None => Value::Null,
        Some(Certificate::Drs { d, r, s }) => {
            json!({ "d": f.elem_json(*d), "r": f.elem_json(*r), "s": f.elem_json(*s) })
        }
        Some(Certificate::Char3(c)) => {
            json!({ "mu": c.mu.format(f), "gamma": f.elem_json(c.gamma), "nu": c.nu.format(f) })
        }
    };
    json!({
        "is_perm": v.is_perm,
        "case": case,
        "rational": v.rational.as_ref().map(|r| r.format(f)),
        "certificate": certificate,
        "collision": v.collision.map(|(a, b)| json!([elems(f, &a), elems(f, &b)])),
    })
}

fn homog_json(f: &Field, row: &Homog3Row) -> (Value, bool) {
    let mut rec = json!({ "coeffs": elems(f, &row.system.to_vec()), "oracle": row.oracle });
    match &row.verdict {
        Ok(v) => rec["classifier"] = homog_verdict_json(f, v),
        Err(e) => rec["error"] = json!(e.to_string()),
    }
    rec["irreducibility_criterion"] = match &row.irreducibility {
        Ok(b) => json!(b),
        Err(e) => json!(e.to_string()),
    };
    let agree = row.agree();
    rec["agree"] = json!(agree);
    (rec, !agree)
}

fn probe_json(f: &Field, r: &ProbeRecord) -> Value {
    json!({
        "index": r.index,
        "system": r.system.to_string(),
        "is_perm": r.is_perm,
        "status": if r.unresolved() { "unresolved" } else { "witnessed" },
        "witness": r.witness.as_ref().map(|w| w.to_json(f)),
    })
}

fn read_inline_or_file(s: &str) -> Result<String, CliError> {
    match s.strip_prefix('@') {
        Some(path) => Ok(std::fs::read_to_string(path)?),
        None => Ok(s.to_string()),
    }
}

/// Runs one command, writing JSONL records to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let f = cli.field()?;
    let fd = &*f;
    let exec = cli.exec();
    let budget = budget()?;
    let mut sink = Sink { w: out, outcome: Outcome::default() };
    match &cli.command {
        Command::CheckPerm { system } => {
            let sys = parse_system(&f, system)?;
            let v = brute_force_with(&sys, budget, exec)?;
            let mut rec = perm_json(fd, &v);
            rec["system"] = json!(sys.to_string());
            rec["field"] = json!(fd.to_string());
            sink.emit(&rec, false)?;
        }
        Command::Hermite { system } => {
            let sys = parse_system(&f, system)?;
            let h = hermite_check_with(&sys, budget)?;
            let b = brute_force_with(&sys, budget, exec)?;
            let mut rec = perm_json(fd, &h);
            rec["system"] = json!(sys.to_string());
            rec["field"] = json!(fd.to_string());
            rec["brute_force"] = json!(b.is_perm);
            rec["agree"] = json!(h.is_perm == b.is_perm);
            sink.emit(&rec, h.is_perm != b.is_perm)?;
        }
        Command::ClassifyQuad { coeffs } => {
            let c = QuadCoeffs::from_slice(&parse_coeffs(fd, coeffs, 10)?).expect("ten coefficients");
            let oracle = brute_force_with(&c.to_system(&f), budget, exec)?.is_perm;
            let (rec, red) = quad_json(fd, &c, &canonical_form(&f, &c), oracle, true);
            sink.emit(&rec, red)?;
        }
        Command::ScanQuad { exhaustive, samples, seed } => {
            let emit_rows = |sink: &mut Sink, rows: &[QuadRow]| -> Result<(), CliError> {
                for r in rows {
                    let (rec, red) = quad_json(fd, &r.coeffs, &r.verdict, r.oracle, false);
                    sink.emit(&rec, red)?;
                }
                Ok(())
            };
            if *exhaustive {
                let total = sweep::quad_space(fd.q());
                let mut start = 0;
                while start < total {
                    let end = (start + BATCH).min(total);
                    let ranks: Vec<u64> = (start..end).collect();
                    emit_rows(&mut sink, &sweep::scan_quad(&f, &ranks, exec)?)?;
                    start = end;
                }
            } else {
                let n = samples.ok_or_else(|| CliError::Usage("scan-quad needs --exhaustive or --samples N".into()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let ranks = sweep::sample_quad_ranks(fd.q(), n, &mut rng);
                for chunk in ranks.chunks(BATCH as usize) {
                    emit_rows(&mut sink, &sweep::scan_quad(&f, chunk, exec)?)?;
                }
            }
        }
        Command::ClassifyHomog3 { coeffs } => {
            let s = HomogSystem::from_slice(&parse_coeffs(fd, coeffs, 6)?).expect("six coefficients");
            let oracle = brute_force_with(&s.to_system(&f), budget, exec)?.is_perm;
            let row = Homog3Row { system: s, verdict: classify_t32_with(fd, &s, None), irreducibility: irreducibility_criterion(fd, &s), oracle };
            let (rec, red) = homog_json(fd, &row);
            sink.emit(&rec, red)?;
        }
        Command::ScanHomog3 { exhaustive } => {
            if !exhaustive {
                return Err(CliError::Usage("scan-homog3 only supports --exhaustive".into()));
            }
            let table = if fd.q() % 3 == 2 { Some(DrsTable::new(fd)?) } else { None };
            let total = sweep::homog3_space(fd.q());
            let mut start = 0;
            while start < total {
                let end = (start + BATCH).min(total);
                for row in sweep::scan_homog3(&f, start..end, table.as_ref(), exec)? {
                    let (rec, red) = homog_json(fd, &row);
                    sink.emit(&rec, red)?;
                }
                start = end;
            }
        }
        Command::ScanBinomial { even, strict } => {
            let ext = QuadExt::new(&f)?;
            if *even != matches!(ext.kind(), ExtKind::Even) {
                return Err(CliError::Usage(format!(
                    "--even {} characteristic 2, field has characteristic {}",
                    if *even { "needs" } else { "is required for" },
                    fd.p()
                )));
            }
            let reading = if *strict { Reading::Strict } else { Reading::Literal };
            for r in binomial::scan(&ext, reading, exec)? {
                let rec = json!({
                    "q": r.q,
                    "a1": fd.elem_json(r.a1),
                    "a2": fd.elem_json(r.a2),
                    "predicted": r.predicted,
                    "case": r.case.label(),
                    "oracle": r.oracle,
                    "agree": r.agree,
                    "flagged": r.flagged,
                });
                sink.emit(&rec, !r.agree || r.flagged)?;
            }
        }
        Command::VerifyEquiv { from, to, witness } => {
            let a = parse_system(&f, from)?;
            let b = parse_system(&f, to)?;
            let v: Value = serde_json::from_str(&read_inline_or_file(witness)?)?;
            let w = EquivWitness::from_json(&f, a.n(), &v)?;
            let ok = verify_witness(&a, &b, &w);
            sink.emit(&json!({ "from": a.to_string(), "to": b.to_string(), "steps": w.len(), "valid": ok }), !ok)?;
        }
        Command::ConjectureScan { n, samples, seed, sampler, restricted } => {
            if fd.p() == 2 {
                return Err(ClassifyError::EvenCharacteristic.into());
            }
            let records = if *restricted {
                conjecture::probe_restricted(&f, *n, exec)?
            } else {
                let sampler = match sampler {
                    SamplerArg::Dense => Sampler::Dense,
                    SamplerArg::Planted => Sampler::Planted,
                    SamplerArg::Mixed => Sampler::Mixed,
                };
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                conjecture::probe_sampled(&f, *n, *samples, sampler, &mut rng, exec)?
            };
            for r in records.iter().filter(|r| r.unresolved()) {
                sink.emit(&probe_json(fd, r), true)?;
            }
            let s = conjecture::summarize(&records);
            sink.emit(
                &json!({
                    "summary": {
                        "field": fd.to_string(),
                        "n": n,
                        "systems": s.systems,
                        "permutations": s.permutations,
                        "witnessed": s.witnessed,
                        "unresolved": s.unresolved,
                    }
                }),
                false,
            )?;
        }
    }
    sink.w.flush()?;
    Ok(sink.outcome)
}
