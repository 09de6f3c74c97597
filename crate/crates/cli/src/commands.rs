use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};
use supermart::certificates::json::{
    check_finite, check_symbolic, finite_cert_to_json, finite_map_to_json, finite_pair, map_to_json, parse_finite_cert,
    parse_symbolic_cert, symbolic_cert_to_json, verdict_to_json,
};
use supermart::certificates::symbolic::key_label;
use supermart::certificates::translate::translate_cert;
use supermart::certificates::{Kind, Verdict};
use supermart::oracle::{
    almost_sure_parity, expected_steps_exact, ke_iterate, kp_iterate, null_recurrent, sample_traces, step_distribution_exact,
    StepDistribution, StepValue,
};
use supermart::poly::Polynomial;
use supermart::rational::{format_rat, parse_rat, Rat};
use supermart::synthesis::{synthesize as synth_symbolic, synthesize_finite, SynthesisResult, SynthesisTrace, TemplateConfig};

use crate::input::{load, read, write_output, Model};
use crate::{Analysis, Format, Mode, SynthArgs, EXIT_ACCEPT, EXIT_REJECT, EXIT_UNKNOWN};

pub fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Accept { .. } => EXIT_ACCEPT,
        Verdict::Reject { .. } => EXIT_REJECT,
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
    }
}

/// `key value` lines for every leaf of a JSON value.
pub fn render_table(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, x, out);
                }
            }
            Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, out);
                }
            }
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, x)| format!("{k:width$}  {x}")).collect::<Vec<_>>().join("\n")
}

fn emit(v: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(v).expect("serialisable"),
        Format::Table | Format::Csv => render_table(v),
    }
}

pub fn check(input: &Path, certificate: &Path, mode: Mode, pair: Option<usize>, format: Format) -> Result<u8> {
    let model = load(input, mode)?;
    let text = read(certificate)?;
    let (verdict, kind) = match &model {
        Model::System(sys) => {
            let mut cert = parse_symbolic_cert(&text, sys).with_context(|| format!("reading {}", certificate.display()))?;
            cert.pair = pair.or(cert.pair);
            (check_symbolic(sys, &cert), cert.kind)
        }
        Model::Chain(c) => {
            let mut cert = parse_finite_cert(&text, &c.chain).with_context(|| format!("reading {}", certificate.display()))?;
            cert.pair = pair.or(cert.pair);
            (check_finite(&c.chain, c.pair.as_ref(), &cert), cert.kind)
        }
    };
    tracing::info!(verdict = verdict.name(), "checked {}", certificate.display());
    println!("{}", emit(&verdict_to_json(&verdict, kind, model.mode_name()), format));
    Ok(verdict_code(&verdict))
}

pub fn template_config(args: &SynthArgs) -> Result<TemplateConfig> {
    let coeff_bound = args.coeff_bound.as_deref().map(parse_rat).transpose().map_err(|e| anyhow!("--coeff-bound: {e}"))?;
    Ok(TemplateConfig { degree: args.degree, coeff_bound, max_rounds: args.max_rounds, optimise: !args.no_opt })
}

/// Outcome of one synthesis run, ready to print.
pub struct SynthReport {
    pub code: u8,
    pub result: &'static str,
    pub document: Value,
    pub shape: Option<Vec<usize>>,
    pub trace: SynthesisTrace,
}

pub fn run_synthesis(model: &Model, args: &SynthArgs) -> Result<SynthReport> {
    let config = template_config(args)?;
    let outcome = match model {
        Model::System(sys) => synth_symbolic(sys, &config, &args.solver.backend()).map(|(res, trace)| match res {
            SynthesisResult::Found(map) => (Ok((map_to_json(sys, &map), map.shape)), trace),
            SynthesisResult::NotFound { j, stuck } => {
                (Err((j, stuck.iter().map(|k| key_label(&sys.pcfg, *k)).collect::<Vec<_>>())), trace)
            }
        }),
        Model::Chain(c) => synthesize_finite(&c.chain, config.max_rounds).map(|(res, trace)| match res {
            SynthesisResult::Found(map) => (Ok((finite_map_to_json(&c.chain, &map), map.shape)), trace),
            SynthesisResult::NotFound { j, stuck } => {
                (Err((j, stuck.iter().map(|s| c.chain.label(*s).to_string()).collect())), trace)
            }
        }),
    };
    Ok(match outcome {
        Ok((Ok((document, shape)), trace)) => SynthReport { code: EXIT_ACCEPT, result: "found", document, shape: Some(shape), trace },
        Ok((Err((j, stuck)), trace)) => SynthReport {
            code: EXIT_REJECT,
            result: "not_found",
            document: json!({"result": "not_found", "block": j, "stuck": stuck}),
            shape: None,
            trace,
        },
        Err(e) => SynthReport {
            code: EXIT_UNKNOWN,
            result: "unknown",
            document: json!({"result": "unknown", "reason": e.to_string()}),
            shape: None,
            trace: SynthesisTrace::default(),
        },
    })
}

pub fn synthesize(input: &Path, args: &SynthArgs, trace: Option<&Path>, output: Option<&Path>, format: Format) -> Result<u8> {
    let model = load(input, Mode::Auto)?;
    let report = run_synthesis(&model, args)?;
    if let Some(p) = trace {
        let text = serde_json::to_string_pretty(&report.trace)?;
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    if report.code != EXIT_ACCEPT {
        eprintln!("{}", report.document);
    }
    write_output(output, &emit(&report.document, format))?;
    Ok(report.code)
}

pub struct OracleArgs {
    pub analysis: Analysis,
    pub horizon: usize,
    pub seed: u64,
    pub samples: usize,
    pub iterations: usize,
    pub start: Option<String>,
    pub pair: Option<usize>,
}

fn step_value(v: &StepValue) -> Value {
    match v {
        StepValue::Exact(r) => json!(format_rat(r)),
        StepValue::Divergent => json!("inf"),
    }
}

fn distribution(d: &StepDistribution) -> Value {
    json!({"masses": d.masses.iter().map(format_rat).collect::<Vec<_>>(), "tail": format_rat(&d.tail)})
}

pub fn oracle(input: &Path, args: &OracleArgs, format: Format) -> Result<u8> {
    let Model::Chain(c) = load(input, Mode::Finite)? else { unreachable!("finite mode loads chains") };
    let chain = &c.chain;
    let labels = chain.labels();
    let pair = finite_pair(chain, c.pair.as_ref(), args.pair).map_err(|e| anyhow!(e))?;
    let by_state = |vals: Vec<Value>| -> Value { labels.iter().cloned().zip(vals).collect::<serde_json::Map<_, _>>().into() };
    let report = match args.analysis {
        Analysis::Summary => {
            let parity = almost_sure_parity(chain);
            let nr = null_recurrent(chain, &pair);
            let e = expected_steps_exact(chain, &pair);
            json!({
                "states": (0..chain.len()).map(|s| json!({
                    "state": labels[s],
                    "priority": chain.priority(s),
                    "almost_sure_parity": parity[s],
                    "null_recurrent": nr[s],
                    "expected_steps": step_value(&e[s]),
                })).collect::<Vec<_>>(),
            })
        }
        Analysis::Expected => json!({"expected_steps": by_state(expected_steps_exact(chain, &pair).iter().map(step_value).collect())}),
        Analysis::Distribution => json!({
            "horizon": args.horizon,
            "distributions": by_state(step_distribution_exact(chain, &pair, args.horizon).iter().map(distribution).collect()),
        }),
        Analysis::NullRecurrent => json!({"null_recurrent": by_state(null_recurrent(chain, &pair).into_iter().map(Value::from).collect())}),
        Analysis::Parity => json!({"almost_sure_parity": by_state(almost_sure_parity(chain).into_iter().map(Value::from).collect())}),
        Analysis::Ke => json!({
            "iterates": ke_iterate(chain, &pair, args.iterations)
                .iter()
                .map(|it| by_state(it.iter().map(|v| json!(format_rat(v))).collect()))
                .collect::<Vec<_>>(),
        }),
        Analysis::Kp => {
            let its = kp_iterate(chain, &pair, args.horizon, args.iterations);
            json!({
                "horizon": args.horizon,
                "iterations": args.iterations,
                "last": its.last().map(|it| by_state(it.iter().map(distribution).collect())),
            })
        }
        Analysis::Sample => {
            let s0 = match &args.start {
                Some(l) => labels.iter().position(|x| x == l).ok_or_else(|| anyhow!("unknown state `{l}`"))?,
                None => 0,
            };
            let r = sample_traces(chain, Some(&pair), s0, args.horizon, args.samples, args.seed);
            json!({"start": labels[s0], "seed": args.seed, "report": serde_json::to_value(r)?})
        }
    };
    println!("{}", emit(&report, format));
    Ok(EXIT_ACCEPT)
}

pub fn translate(model_path: &Path, to: &str, pair: Option<usize>, certificates: &[PathBuf]) -> Result<u8> {
    let to = Kind::parse(to).ok_or_else(|| anyhow!("unknown kind `{to}`"))?;
    let model = load(model_path, Mode::Auto)?;
    let d = model.max_priority();
    let out = match &model {
        Model::System(sys) => {
            let certs = certificates
                .iter()
                .map(|p| parse_symbolic_cert(&read(p)?, sys).with_context(|| format!("reading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            let zero = Polynomial::zero(sys.pcfg.nvars());
            let t = translate_cert(&certs, to, d, pair, &zero, |p, e| p.scale(&(Rat::from_integer(1.into()) / e)))
                .map_err(|e| anyhow!(e))?;
            symbolic_cert_to_json(sys, &t)
        }
        Model::Chain(c) => {
            let certs = certificates
                .iter()
                .map(|p| parse_finite_cert(&read(p)?, &c.chain).with_context(|| format!("reading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            let t = translate_cert(&certs, to, d, pair, &Rat::from_integer(0.into()), |v, e| v / e).map_err(|e| anyhow!(e))?;
            finite_cert_to_json(&c.chain, &t)
        }
    };
    if certificates.is_empty() {
        bail!("no certificate given");
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(EXIT_ACCEPT)
}
