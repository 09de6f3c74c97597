//! SMT-LIB2 emission and a subprocess bridge to an external solver.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write as _};
use std::process::{Command, Stdio};
use std::time::Duration;

use num_traits::{One, Signed, Zero};
use wait_timeout::ChildExt;

use super::{ParamSystem, Pqe};
use crate::lp::VarKind;
use crate::model::Rel;
use crate::poly::LinForm;
use crate::rational::{parse_rat, Rat};

/// Symbol of parameter `i` in emitted documents.
pub fn param_symbol(i: usize) -> String {
    format!("p{i}")
}

fn universal_symbol(i: usize) -> String {
    format!("x{i}")
}

fn rat_term(r: &Rat) -> String {
    let body = if r.is_integer() {
        r.numer().abs().to_string()
    } else {
        format!("(/ {} {})", r.numer().abs(), r.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn linform_term(f: &LinForm) -> String {
    let mut parts: Vec<String> = f
        .coeffs
        .iter()
        .map(|(p, c)| if c.is_one() { param_symbol(*p) } else { format!("(* {} {})", rat_term(c), param_symbol(*p)) })
        .collect();
    if !f.constant.is_zero() || parts.is_empty() {
        parts.push(rat_term(&f.constant));
    }
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn rel_symbol(rel: Rel) -> &'static str {
    match rel {
        Rel::Ge => ">=",
        Rel::Gt => ">",
        Rel::Eq => "=",
    }
}

fn monomial_term(m: &[u32]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, &e) in m.iter().enumerate() {
        for _ in 0..e {
            out.push(universal_symbol(i));
        }
    }
    out
}

fn raw_assertion(p: &Pqe) -> String {
    let binders: Vec<String> = (0..p.universals.len()).map(|i| format!("({} Real)", universal_symbol(i))).collect();
    let ante: Vec<String> = p
        .antecedent
        .iter()
        .map(|a| {
            let poly = poly_term(a.poly.terms().iter().map(|(m, c)| (m.as_slice(), rat_term(c))));
            format!("({} {} 0)", rel_symbol(a.rel), poly)
        })
        .collect();
    let cons = poly_term(p.consequent.terms().iter().map(|(m, f)| (m.as_slice(), linform_term(f))));
    let cons = format!("({} {} 0)", if p.strict { ">" } else { ">=" }, cons);
    let body = match ante.len() {
        0 => cons,
        1 => format!("(=> {} {})", ante[0], cons),
        _ => format!("(=> (and {}) {})", ante.join(" "), cons),
    };
    if binders.is_empty() {
        body
    } else {
        format!("(forall ({}) {})", binders.join(" "), body)
    }
}

fn poly_term<'a>(terms: impl Iterator<Item = (&'a [u32], String)>) -> String {
    let mut parts: Vec<String> = terms
        .map(|(m, coeff)| {
            let mut factors = vec![coeff];
            factors.extend(monomial_term(m));
            if factors.len() == 1 {
                factors.pop().expect("one factor")
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    match parts.len() {
        0 => "0".to_string(),
        1 => parts.pop().expect("one part"),
        _ => format!("(+ {})", parts.join(" ")),
    }
}

/// Renders a system as an SMT-LIB2 document. The output depends only on the
/// system. With `optimise`, an objective becomes a `maximize` directive;
/// otherwise it is asserted positive.
pub fn emit_smt(sys: &ParamSystem, optimise: bool) -> String {
    let mut out = String::new();
    let logic = if sys.raw.is_empty() { "QF_NRA" } else { "NRA" };
    writeln!(out, "(set-logic {logic})").unwrap();
    for (i, name) in sys.names.iter().enumerate() {
        writeln!(out, "(declare-const {} Real) ; {}", param_symbol(i), name.replace('\n', " ")).unwrap();
    }
    for (i, k) in sys.kinds.iter().enumerate() {
        if *k == VarKind::NonNeg {
            writeln!(out, "(assert (>= {} 0))", param_symbol(i)).unwrap();
        }
    }
    for c in &sys.constraints {
        writeln!(out, "(assert ({} {} 0)) ; {}", rel_symbol(c.rel), linform_term(&c.form), c.label.replace('\n', " "))
            .unwrap();
    }
    for p in &sys.raw {
        writeln!(out, "(assert {}) ; {}", raw_assertion(p), p.label.replace('\n', " ")).unwrap();
    }
    if let Some(obj) = &sys.objective {
        if optimise {
            writeln!(out, "(maximize {})", linform_term(obj)).unwrap();
        } else {
            writeln!(out, "(assert (> {} 0))", linform_term(obj)).unwrap();
        }
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverOutput {
    Sat(BTreeMap<String, Rat>),
    Unsat,
    Unknown(String),
}

/// Runs `command` through `sh -c` with `{file}` replaced by the path of a
/// temporary file holding `document` (appended when the placeholder is
/// absent).
pub fn run_solver(document: &str, command: &str, timeout: Duration) -> SolverOutput {
    let mut file = match tempfile::Builder::new().suffix(".smt2").tempfile() {
        Ok(f) => f,
        Err(e) => return SolverOutput::Unknown(format!("temp file: {e}")),
    };
    if let Err(e) = file.write_all(document.as_bytes()).and_then(|_| file.flush()) {
        return SolverOutput::Unknown(format!("temp file: {e}"));
    }
    let path = file.path().display().to_string();
    let cmdline =
        if command.contains("{file}") { command.replace("{file}", &path) } else { format!("{command} {path}") };
    let mut child = match Command::new("sh")
        .arg("-c")
        .arg(&cmdline)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return SolverOutput::Unknown(format!("spawn `{cmdline}`: {e}")),
    };
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let status = match child.wait_timeout(timeout) {
        Ok(Some(status)) => status,
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            return SolverOutput::Unknown(format!("timed out after {}s", timeout.as_secs()));
        }
        Err(e) => return SolverOutput::Unknown(format!("wait: {e}")),
    };
    let text = match out_reader.join() {
        Ok(Ok(s)) => s,
        _ => return SolverOutput::Unknown("could not read solver output".into()),
    };
    let err = err_reader.join().unwrap_or_default();
    match parse_response(&text) {
        Ok(SolverOutput::Unknown(why)) if !status.success() => {
            SolverOutput::Unknown(format!("{why}; exit status {status}; stderr: {}", err.trim()))
        }
        Ok(out @ (SolverOutput::Sat(_) | SolverOutput::Unsat)) => out,
        Ok(out) => out,
        Err(why) => SolverOutput::Unknown(format!("{why}; exit status {status}; stderr: {}", err.trim())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            '|' => {
                cur.push(c);
                for c in chars.by_ref() {
                    cur.push(c);
                    if c == '|' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_sexps(tokens: &[String]) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in tokens {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(done));
            }
            _ => stack.last_mut().expect("non-empty stack").push(Sexp::Atom(t.clone())),
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().expect("root"))
}

fn eval_value(e: &Sexp) -> Result<Rat, String> {
    match e {
        Sexp::Atom(a) => parse_rat(a).map_err(|e| format!("value `{a}`: {}", e.0)),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Ok(-eval_value(x)?),
            [Sexp::Atom(op), a, b] if op == "/" => {
                let d = eval_value(b)?;
                if d.is_zero() {
                    return Err("division by zero in model".into());
                }
                Ok(eval_value(a)? / d)
            }
            [Sexp::Atom(op), a, b] if op == "-" => Ok(eval_value(a)? - eval_value(b)?),
            [Sexp::Atom(op), rest @ ..] if op == "+" => rest.iter().map(eval_value).sum(),
            [Sexp::Atom(op), rest @ ..] if op == "*" => {
                rest.iter().try_fold(Rat::one(), |acc, x| Ok::<Rat, String>(acc * eval_value(x)?))
            }
            _ => Err(format!("unsupported model value {e:?}")),
        },
    }
}

/// Parses `sat`/`unsat`/`unknown` followed by an optional `get-model` reply.
fn parse_response(text: &str) -> Result<SolverOutput, String> {
    let sexps = parse_sexps(&tokenize(text))?;
    let mut iter = sexps.iter();
    let head = loop {
        match iter.next() {
            Some(Sexp::Atom(a)) => break a.as_str(),
            // `(error ...)` lines and optimisation objectives may precede the verdict.
            Some(Sexp::List(_)) => continue,
            None => return Err("empty solver response".into()),
        }
    };
    match head {
        "unsat" => Ok(SolverOutput::Unsat),
        "unknown" | "timeout" => Ok(SolverOutput::Unknown("solver answered unknown".into())),
        "sat" => {
            let mut values = BTreeMap::new();
            for e in iter {
                let Sexp::List(items) = e else { continue };
                let defs = match items.first() {
                    Some(Sexp::Atom(a)) if a == "model" => &items[1..],
                    _ => &items[..],
                };
                for d in defs {
                    if let Sexp::List(parts) = d {
                        if let [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(args), _sort, value] = parts.as_slice() {
                            if kw == "define-fun" && args.is_empty() {
                                values.insert(name.trim_matches('|').to_string(), eval_value(value)?);
                            }
                        }
                    }
                }
            }
            Ok(SolverOutput::Sat(values))
        }
        other => Err(format!("unexpected solver reply `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn model_values_parse_exactly() {
        let text = "sat\n(\n  (define-fun p0 () Real (/ 1 3))\n  (define-fun p1 () Real (- 2.5))\n  (define-fun |p2| () Real (- (/ 7 2)))\n  (define-fun p3 () Real 4.0)\n)\n";
        let SolverOutput::Sat(v) = parse_response(text).unwrap() else { panic!() };
        assert_eq!(v["p0"], rat(1, 3));
        assert_eq!(v["p1"], rat(-5, 2));
        assert_eq!(v["p2"], rat(-7, 2));
        assert_eq!(v["p3"], int(4));
        assert_eq!(parse_response("unsat\n").unwrap(), SolverOutput::Unsat);
        assert!(parse_response("garbage").is_err());
    }

    #[test]
    fn emission_is_stable() {
        let mut sys = ParamSystem::new();
        let t = sys.add_param("t", VarKind::Free);
        sys.add_param("lambda", VarKind::NonNeg);
        let mut f = LinForm::param(t);
        f.constant = rat(-1, 2);
        sys.add_constraint(f, Rel::Ge, "t >= 1/2");
        let a = emit_smt(&sys, false);
        assert_eq!(a, emit_smt(&sys, false));
        assert!(a.contains("(assert (>= (+ p0 (- (/ 1 2))) 0))"), "{a}");
        assert!(a.contains("(assert (>= p1 0))"));
    }

    #[test]
    fn missing_solver_is_unknown() {
        let out = run_solver("(check-sat)", "definitely-not-a-solver-binary {file}", Duration::from_secs(5));
        assert!(matches!(out, SolverOutput::Unknown(_)), "{out:?}");
        let out = run_solver("(check-sat)", "printf 'sat\\n((define-fun p0 () Real 3))\\n' # {file}", Duration::from_secs(5));
        assert_eq!(out, SolverOutput::Sat(BTreeMap::from([("p0".to_string(), int(3))])));
        let out = run_solver("", "sleep 5; echo sat # {file}", Duration::from_secs(1));
        assert!(matches!(out, SolverOutput::Unknown(ref w) if w.contains("timed out")), "{out:?}");
    }
}
