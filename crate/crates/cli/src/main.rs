//! `pwb`: command-line workbench over the profinite crate.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use profinite::factorization::{build_factorization_graph, history_of, reconstruct, GraphMode, History, Layout};
use profinite::freegroup::{closure_g, GroupWord, InverseStyle, Sym};
use profinite::kappa::{equal_over_g, normalize_unary_bn, parse_exponent, parse_term, refute_over_s, standard_morphisms, KappaTerm, Refutation};
use profinite::rational::{compile, infer_alphabet, is_cube_free, parse_regex, syntactic_monoid, syntactic_semigroup, thue_morse, RegexAst};
use profinite::semigroup::{catalog, FiniteSemigroup, Pseudovariety, SemigroupMorphism};
use profinite::separation::{enumerate_closure_terms, separate_by_g, separate_by_v, Budgets, ClosureExpr, SeparationVerdict};

/// Longest word `expand` will print.
const EXPAND_CAP: u64 = 10_000_000;

#[derive(Parser)]
#[command(name = "pwb", version, about = "Profinite closures, κ-terms and factorizations at desk scale")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Closure of a rational language in the profinite group topology.
    ClosureG(ClosureGArgs),
    /// Separation of two rational languages by a pseudovariety.
    Separate(SeparateArgs),
    /// The word ε_n(t).
    Expand(ExpandArgs),
    /// Histories of the factorizations of ε_n(t).
    Histories(HistoriesArgs),
    /// The factorization multigraph Γ_k.
    Graph(GraphArgs),
    /// Syntactic semigroup of a rational language.
    Syntactic(SyntacticArgs),
    /// Value of a term in a finite semigroup.
    EvalTerm(EvalTermArgs),
    /// Equality of two terms over G, with a refutation search over S.
    WordproblemG(WordProblemArgs),
    /// Closure terms of a rational language, lightest first.
    Enumerate(EnumerateArgs),
    /// Normal form of an exponent modulo x^{ω+n} = x^ω.
    NormalizeBn(NormalizeBnArgs),
    /// Thue-Morse iterate and its cube-freeness.
    ThueMorse(ThueMorseArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Args)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Shorthand for --format json.
    #[arg(long)]
    json: bool,
}

impl Output {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StyleArg {
    Capital,
    Prime,
}

impl From<StyleArg> for InverseStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Capital => InverseStyle::Capital,
            StyleArg::Prime => InverseStyle::Prime,
        }
    }
}

#[derive(Args)]
struct ClosureGArgs {
    /// Regular expression over the positive letters.
    #[arg(long)]
    regex: String,
    /// Alphabet; inferred from the expression when omitted.
    #[arg(long)]
    alphabet: Option<String>,
    /// Test membership of a group word (`aB`, `ab'`, `1`).
    #[arg(long)]
    member: Option<String>,
    /// Reduced words listed in text output, up to this length.
    #[arg(long, default_value_t = 4)]
    max_len: usize,
    #[arg(long, value_enum, default_value_t = StyleArg::Capital)]
    inverse_style: StyleArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SeparateArgs {
    /// G, A, S or Bn:<n>.
    #[arg(long = "class")]
    class: String,
    #[arg(long = "k")]
    k: String,
    #[arg(long = "l")]
    l: String,
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long, default_value_t = 3)]
    max_states: usize,
    #[arg(long, default_value_t = 500)]
    max_terms: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    term: String,
    #[arg(long, default_value_t = 4)]
    n: u32,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct HistoriesArgs {
    #[arg(long)]
    term: String,
    #[arg(long, default_value_t = 4)]
    n: u32,
    /// Split position; omit to list every factorization.
    #[arg(long, conflicts_with = "history")]
    position: Option<u64>,
    /// A history as JSON, to be mapped back to its position.
    #[arg(long)]
    history: Option<String>,
    /// Cap on listed factorizations.
    #[arg(long, default_value_t = 10_000)]
    limit: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Explicit,
    Symbolic,
}

#[derive(Args)]
struct GraphArgs {
    /// A term t0 s^{ω+g} t1 with a single top-rank power.
    #[arg(long)]
    term: String,
    /// Regular expression for L.
    #[arg(long)]
    lang: String,
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long, default_value_t = 4)]
    k: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Symbolic)]
    mode: ModeArg,
    /// Paths listed in text and JSON output.
    #[arg(long, default_value_t = 5)]
    paths: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SyntacticArgs {
    #[arg(long)]
    regex: String,
    #[arg(long)]
    alphabet: Option<String>,
    /// Adjoin an identity for the empty word.
    #[arg(long)]
    monoid: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct EvalTermArgs {
    #[arg(long)]
    term: String,
    /// Table file: `m`, then m rows of m indices, optionally `identity i`.
    #[arg(long, conflicts_with = "semigroup")]
    table: Option<String>,
    /// A catalog semigroup by name (see --list).
    #[arg(long)]
    semigroup: Option<String>,
    /// Letter images, e.g. `a=0,b=1`.
    #[arg(long)]
    images: Option<String>,
    /// List catalog names and exit.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct WordProblemArgs {
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    /// Morphisms tried when refuting over S.
    #[arg(long, default_value_t = 4096)]
    budget: usize,
    #[arg(long, value_enum, default_value_t = StyleArg::Capital)]
    inverse_style: StyleArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    regex: String,
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long, default_value_t = 500)]
    max_terms: usize,
    /// Treat the whole language as one base and close it under products and
    /// powers, instead of reading the expression with closure semantics.
    #[arg(long)]
    plus_of_language: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct NormalizeBnArgs {
    /// `w`, `w+k`, `w-k` or a positive integer.
    #[arg(long, allow_hyphen_values = true)]
    exponent: String,
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ThueMorseArgs {
    #[arg(long)]
    k: u32,
    #[command(flatten)]
    out: Output,
}

/// Failure of a verb: message and exit code.
#[derive(Debug)]
struct Failure(String, u8);

fn usage(verb: &str, msg: impl std::fmt::Display) -> Failure {
    Failure(format!("pwb {verb}: {msg}\nsee `pwb {verb} --help`"), 2)
}

type Outcome = Result<(String, u8), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.verb {
        Verb::ClosureG(a) => closure_g_cmd(a),
        Verb::Separate(a) => separate_cmd(a),
        Verb::Expand(a) => expand_cmd(a),
        Verb::Histories(a) => histories_cmd(a),
        Verb::Graph(a) => graph_cmd(a),
        Verb::Syntactic(a) => syntactic_cmd(a),
        Verb::EvalTerm(a) => eval_term_cmd(a),
        Verb::WordproblemG(a) => wordproblem_cmd(a),
        Verb::Enumerate(a) => enumerate_cmd(a),
        Verb::NormalizeBn(a) => normalize_bn_cmd(a),
        Verb::ThueMorse(a) => thue_morse_cmd(a),
    };
    match result {
        Ok((text, code)) => {
            let mut out = std::io::stdout().lock();
            let nl = if text.ends_with('\n') { "" } else { "\n" };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = write!(out, "{text}{nl}").and_then(|_| out.flush());
            ExitCode::from(code)
        }
        Err(Failure(msg, code)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

fn pretty(v: Value) -> String {
    serde_json::to_string_pretty(&v).expect("values serialize")
}

fn no_dot(verb: &str, f: Format) -> Result<(), Failure> {
    if f == Format::Dot {
        Err(usage(verb, "DOT output is not available for this verb"))
    } else {
        Ok(())
    }
}

fn alphabet_for(verb: &str, given: &Option<String>, texts: &[&str]) -> Result<Vec<char>, Failure> {
    let mut alpha: Vec<char> = match given {
        Some(a) => a.chars().filter(|c| !c.is_whitespace() && *c != ',').collect(),
        None => infer_alphabet(texts.iter().copied()),
    };
    alpha.sort_unstable();
    alpha.dedup();
    if alpha.is_empty() {
        return Err(usage(verb, "empty alphabet"));
    }
    Ok(alpha)
}

fn regex(verb: &str, text: &str, alphabet: &[char]) -> Result<RegexAst, Failure> {
    parse_regex(text, alphabet).map_err(|e| usage(verb, format!("{text:?}: {e}")))
}

fn term(verb: &str, text: &str) -> Result<KappaTerm, Failure> {
    parse_term(text).map_err(|e| usage(verb, format!("{text:?}: {e}")))
}

fn pseudovariety(verb: &str, text: &str) -> Result<Pseudovariety, Failure> {
    match text.trim() {
        "G" => Ok(Pseudovariety::G),
        "A" => Ok(Pseudovariety::A),
        "S" => Ok(Pseudovariety::S),
        other => other
            .strip_prefix("Bn:")
            .and_then(|n| n.parse::<u32>().ok())
            .filter(|&n| n > 0)
            .map(Pseudovariety::Bn)
            .ok_or_else(|| usage(verb, format!("unknown class {other:?}; expected G, A, S or Bn:<n>"))),
    }
}

fn sym_label(style: InverseStyle) -> impl Fn(char) -> String {
    move |c| match Sym::from_char(c) {
        Ok(s) => GroupWord::from_syms(vec![s]).display(style),
        Err(_) => c.to_string(),
    }
}

fn closure_g_cmd(a: ClosureGArgs) -> Outcome {
    const V: &str = "closure-g";
    let alphabet = alphabet_for(V, &a.alphabet, &[&a.regex])?;
    if let Some(c) = alphabet.iter().find(|c| !c.is_ascii_lowercase()) {
        return Err(usage(V, format!("letter {c:?} is not a lowercase ASCII letter")));
    }
    let e = regex(V, &a.regex, &alphabet)?;
    let cl = closure_g(&alphabet, &e).map_err(|e| usage(V, e))?;
    let style: InverseStyle = a.inverse_style.into();
    let member = match &a.member {
        Some(text) => Some(GroupWord::parse(text).map_err(|e| usage(V, format!("{text:?}: {e}")))?),
        None => None,
    };
    let is_member = member.as_ref().map(|w| cl.member(w));
    let code = if is_member == Some(false) { 1 } else { 0 };
    let text = match a.out.format() {
        Format::Dot => cl.dfa().to_dot_with(sym_label(style)),
        Format::Json => {
            let mut v = json!({"schema": 1, "regex": a.regex, "closure": cl.dfa().to_json_with(sym_label(style))});
            v["closure"]["reducedForm"] = json!(cl.is_reduced_form());
            if let (Some(w), Some(m)) = (&member, is_member) {
                v["member"] = json!({"word": w.display(style), "inClosure": m});
            }
            pretty(v)
        }
        Format::Text => {
            let mut s = format!("closure of {} in the free group on {}\n", e, alphabet.iter().collect::<String>());
            let elems = cl.elements_up_to(a.max_len);
            if cl.dfa().is_empty() {
                s.push_str("empty\n");
            } else {
                s.push_str(&format!("reduced elements of length ≤ {}: {}\n", a.max_len, elems.iter().map(|w| w.display(style)).collect::<Vec<_>>().join(" ")));
            }
            if let (Some(w), Some(m)) = (&member, is_member) {
                s.push_str(&format!("{} {} the closure\n", w.display(style), if m { "is in" } else { "is not in" }));
            }
            s
        }
    };
    Ok((text, code))
}

fn separate_cmd(a: SeparateArgs) -> Outcome {
    const V: &str = "separate";
    let p = pseudovariety(V, &a.class)?;
    if a.max_states == 0 || a.max_terms == 0 {
        return Err(usage(V, "budgets must be positive"));
    }
    let alphabet = alphabet_for(V, &a.alphabet, &[&a.k, &a.l])?;
    let k = regex(V, &a.k, &alphabet)?;
    let l = regex(V, &a.l, &alphabet)?;
    let budgets = Budgets { max_states: a.max_states, max_terms: a.max_terms };
    let verdict = if p == Pseudovariety::G { separate_by_g(&k, &l, &alphabet) } else { separate_by_v(&k, &l, &p, &alphabet, budgets) }
        .map_err(|e| usage(V, e))?;
    let code = match verdict {
        SeparationVerdict::Separable { .. } => 0,
        _ => 1,
    };
    let text = match a.out.format() {
        Format::Json => pretty(verdict.to_json(budgets)),
        Format::Dot => match &verdict {
            SeparationVerdict::Separable { recognizer: Some(r) } => r.automaton.to_dot(),
            _ => return Err(usage(V, "DOT output needs a recognizer")),
        },
        Format::Text => {
            let mut s = format!("{}\n", verdict.name());
            match &verdict {
                SeparationVerdict::Separable { recognizer: Some(r) } => {
                    s.push_str(&format!(
                        "recognizer: {} states, transition semigroup of order {}\nseparator: {}\n",
                        r.automaton.num_states(),
                        r.semigroup_size,
                        r.separator.to_regex()
                    ));
                }
                SeparationVerdict::Separable { recognizer: None } => s.push_str("closures are disjoint; no small permutation recognizer found\n"),
                SeparationVerdict::NotSeparable { witness } => s.push_str(&format!("witness: {witness}\n")),
                SeparationVerdict::Unknown { automata_tried, terms_tried, .. } => {
                    s.push_str(&format!("automata tried: {automata_tried}, closure terms tried: {terms_tried}\n"))
                }
            }
            s
        }
    };
    Ok((text, code))
}

fn expand_cmd(a: ExpandArgs) -> Outcome {
    const V: &str = "expand";
    no_dot(V, a.out.format())?;
    let t = term(V, &a.term)?;
    let len = t.expanded_len(a.n).map_err(|e| usage(V, e))?;
    if len > EXPAND_CAP {
        return Err(usage(V, format!("ε_{}(t) has {len} letters, above the cap of {EXPAND_CAP}", a.n)));
    }
    let w = t.expand(a.n).map_err(|e| usage(V, e))?;
    Ok(match a.out.format() {
        Format::Json => (pretty(json!({"schema": 1, "term": t.to_string(), "n": a.n, "length": len, "word": w})), 0),
        _ => (w, 0),
    })
}

fn histories_cmd(a: HistoriesArgs) -> Outcome {
    const V: &str = "histories";
    no_dot(V, a.out.format())?;
    let t = term(V, &a.term)?;
    let json_out = a.out.format() == Format::Json;
    if let Some(text) = &a.history {
        let v: Value = serde_json::from_str(text).map_err(|e| usage(V, format!("history is not JSON: {e}")))?;
        let h = History::from_json(&v).map_err(|e| usage(V, e))?;
        let pos = reconstruct(&t, a.n, &h).map_err(|e| usage(V, e))?;
        return Ok(if json_out {
            (pretty(json!({"schema": 1, "term": t.to_string(), "n": a.n, "history": h.to_json(), "position": pos})), 0)
        } else {
            (pos.to_string(), 0)
        });
    }
    if let Some(pos) = a.position {
        let h = history_of(&t, a.n, pos).map_err(|e| usage(V, e))?;
        return Ok(if json_out {
            (pretty(json!({"schema": 1, "term": t.to_string(), "n": a.n, "position": pos, "history": h.to_json()})), 0)
        } else {
            (h.to_json().to_string(), 0)
        });
    }
    let layout = Layout::new(&t, a.n).map_err(|e| usage(V, e))?;
    let mut rows = vec![];
    layout.for_each(&mut |pos, steps| {
        if pos < a.limit {
            rows.push((pos, profinite::factorization::steps_to_history(steps)));
        }
    });
    let truncated = layout.len() > a.limit;
    Ok(if json_out {
        let list: Vec<Value> = rows.iter().map(|(p, h)| json!({"position": p, "history": h.to_json()})).collect();
        (pretty(json!({"schema": 1, "term": t.to_string(), "n": a.n, "length": layout.len(), "truncated": truncated, "factorizations": list})), 0)
    } else {
        let mut s: String = rows.iter().map(|(p, h)| format!("{p}\t{}\n", h.to_json())).collect();
        if truncated {
            s.push_str(&format!("… {} more\n", layout.len() - a.limit));
        }
        (s, 0)
    })
}

fn graph_cmd(a: GraphArgs) -> Outcome {
    const V: &str = "graph";
    let t = term(V, &a.term)?;
    let letters: String = t.letters().into_iter().collect();
    let alphabet = alphabet_for(V, &a.alphabet, &[&a.lang, &letters])?;
    let l = compile(&regex(V, &a.lang, &alphabet)?, &alphabet);
    let mode = match a.mode {
        ModeArg::Explicit => GraphMode::Explicit,
        ModeArg::Symbolic => GraphMode::Symbolic,
    };
    let g = build_factorization_graph(&t, &l, a.k, mode).map_err(|e| usage(V, e))?;
    let count = g.count_paths();
    let paths = g.paths(a.paths);
    let text = match a.out.format() {
        Format::Dot => g.to_dot(),
        Format::Json => {
            let mut v = g.to_json();
            v["schema"] = json!(1);
            v["pathCount"] = json!(count.to_string());
            v["paths"] = json!(paths
                .iter()
                .map(|p| {
                    let f = g.path_to_factorization(p).unwrap_or_default();
                    json!({
                        "edges": p.iter().map(|e| json!([e.from.to_string(), e.weight, e.to.to_string()])).collect::<Vec<_>>(),
                        "factorization": f,
                    })
                })
                .collect::<Vec<_>>());
            pretty(v)
        }
        Format::Text => {
            let mut s = format!(
                "Γ_{} for {} and L = {}: {} vertices, {} edge families, m = {}, p = {}, total weight {}\n{} paths from ι to τ\n",
                a.k,
                t,
                a.lang,
                g.vertices.len(),
                g.edges.len(),
                g.m,
                g.p,
                g.total,
                count
            );
            for p in &paths {
                let edges: Vec<String> = p.iter().map(|e| format!("{} -{}-> {}", e.from, e.weight, e.to)).collect();
                s.push_str(&format!("{}\n", edges.join(", ")));
            }
            s
        }
    };
    Ok((text, 0))
}

fn semigroup_json(s: &FiniteSemigroup) -> Value {
    json!({"order": s.size(), "table": s.rows(), "identity": s.identity()})
}

fn syntactic_cmd(a: SyntacticArgs) -> Outcome {
    const V: &str = "syntactic";
    let alphabet = alphabet_for(V, &a.alphabet, &[&a.regex])?;
    let d = compile(&regex(V, &a.regex, &alphabet)?, &alphabet);
    let syn = if a.monoid { syntactic_monoid(&d) } else { syntactic_semigroup(&d) };
    let s = syn.semigroup();
    let members: Vec<&str> = ["A", "G", "S"]
        .into_iter()
        .filter(|name| s.member(&pseudovariety(V, name).expect("known")).unwrap_or(false))
        .collect();
    let images: Vec<Value> = alphabet.iter().map(|c| json!([c.to_string(), syn.morphism.image(*c).expect("letter")])).collect();
    Ok(match a.out.format() {
        Format::Dot => (d.minimize().to_dot(), 0),
        Format::Json => (
            pretty(json!({
                "schema": 1,
                "regex": a.regex,
                "semigroup": semigroup_json(s),
                "images": images,
                "accepting": syn.accepting,
                "minimalAutomaton": d.minimize().to_json(),
                "pseudovarieties": members,
            })),
            0,
        ),
        _ => {
            let imgs: Vec<String> = alphabet.iter().map(|c| format!("{c}={}", syn.morphism.image(*c).expect("letter"))).collect();
            let accepting: Vec<String> = syn.accepting.iter().map(|x| x.to_string()).collect();
            (
                format!(
                    "{}images {}\naccepting {}\nin {}\n",
                    s.to_table_string(),
                    imgs.join(","),
                    accepting.join(" "),
                    members.join(", ")
                ),
                0,
            )
        }
    })
}

fn parse_images(verb: &str, text: &str, s: &FiniteSemigroup) -> Result<(Vec<char>, Vec<usize>), Failure> {
    let mut pairs = vec![];
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (c, i) = part.split_once('=').ok_or_else(|| usage(verb, format!("image {part:?} is not of the form letter=index")))?;
        let mut cs = c.trim().chars();
        let (Some(letter), None) = (cs.next(), cs.next()) else {
            return Err(usage(verb, format!("{c:?} is not a single letter")));
        };
        let idx: usize = i.trim().parse().map_err(|_| usage(verb, format!("{i:?} is not an index")))?;
        if idx >= s.size() {
            return Err(usage(verb, format!("index {idx} is outside 0..{}", s.size())));
        }
        pairs.push((letter, idx));
    }
    pairs.sort_unstable();
    Ok(pairs.into_iter().unzip())
}

fn eval_term_cmd(a: EvalTermArgs) -> Outcome {
    const V: &str = "eval-term";
    no_dot(V, a.out.format())?;
    let named = catalog::standard();
    if a.list {
        let names: Vec<String> = named.iter().map(|(n, s)| format!("{n}\t{}", s.size())).collect();
        return Ok((names.join("\n"), 0));
    }
    let t = term(V, &a.term)?;
    let s = match (&a.table, &a.semigroup) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| usage(V, format!("{path}: {e}")))?;
            FiniteSemigroup::parse_table(&text).map_err(|e| usage(V, format!("{path}: {e}")))?
        }
        (None, Some(name)) => named.iter().find(|(n, _)| n == name).map(|(_, s)| s.clone()).ok_or_else(|| usage(V, format!("no catalog semigroup named {name:?}")))?,
        (None, None) => return Err(usage(V, "give --table or --semigroup")),
    };
    let images = a.images.as_deref().ok_or_else(|| usage(V, "give --images"))?;
    let (alphabet, imgs) = parse_images(V, images, &s)?;
    let phi = SemigroupMorphism::new(alphabet, s, imgs).map_err(|e| usage(V, e))?;
    let v = t.eval(&phi).map_err(|e| usage(V, e))?;
    Ok(match a.out.format() {
        Format::Json => (pretty(json!({"schema": 1, "term": t.to_string(), "value": v})), 0),
        _ => (v.to_string(), 0),
    })
}

fn wordproblem_cmd(a: WordProblemArgs) -> Outcome {
    const V: &str = "wordproblem-g";
    no_dot(V, a.out.format())?;
    let x = term(V, &a.left)?;
    let y = term(V, &a.right)?;
    let style: InverseStyle = a.inverse_style.into();
    let equal = equal_over_g(&x, &y);
    let alphabet: Vec<char> = x.letters().union(&y.letters()).copied().collect();
    let refutation = refute_over_s(&x, &y, &standard_morphisms(&alphabet), a.budget);
    let code = if equal { 0 } else { 1 };
    let (gx, gy) = (x.to_free_group().display(style), y.to_free_group().display(style));
    Ok(match a.out.format() {
        Format::Json => {
            let s_result = match &refutation {
                Refutation::Counterexample(phi) => json!({
                    "refuted": true,
                    "images": phi.alphabet().iter().zip(phi.images()).map(|(c, i)| json!([c.to_string(), i])).collect::<Vec<_>>(),
                    "semigroup": semigroup_json(phi.target()),
                }),
                Refutation::Unknown { tried } => json!({"refuted": false, "tried": tried}),
            };
            (pretty(json!({"schema": 1, "left": x.to_string(), "right": y.to_string(), "equalOverG": equal, "groupImages": [gx, gy], "overS": s_result})), code)
        }
        _ => {
            let s_line = match &refutation {
                Refutation::Counterexample(phi) => format!("refuted over S in a semigroup of order {}", phi.target().size()),
                Refutation::Unknown { tried } => format!("no refutation over S after {tried} morphisms"),
            };
            (format!("{} over G ({gx} vs {gy})\n{s_line}\n", if equal { "equal" } else { "different" }), code)
        }
    })
}

fn enumerate_cmd(a: EnumerateArgs) -> Outcome {
    const V: &str = "enumerate";
    no_dot(V, a.out.format())?;
    if a.max_terms == 0 {
        return Err(usage(V, "--max-terms must be positive"));
    }
    let alphabet = alphabet_for(V, &a.alphabet, &[&a.regex])?;
    let e = regex(V, &a.regex, &alphabet)?;
    let expr = if a.plus_of_language { ClosureExpr::sigma_plus(ClosureExpr::language(compile(&e, &alphabet))) } else { ClosureExpr::from_regex(&e) };
    let terms = enumerate_closure_terms(&expr, a.max_terms);
    Ok(match a.out.format() {
        Format::Json => (pretty(json!({"schema": 1, "regex": a.regex, "terms": terms.iter().map(|t| t.to_string()).collect::<Vec<_>>()})), 0),
        _ => (terms.iter().map(|t| format!("{t}\n")).collect(), 0),
    })
}

fn normalize_bn_cmd(a: NormalizeBnArgs) -> Outcome {
    const V: &str = "normalize-bn";
    no_dot(V, a.out.format())?;
    if a.n == 0 {
        return Err(usage(V, "--n must be positive"));
    }
    let e = parse_exponent(&a.exponent).map_err(|e| usage(V, e))?;
    let r = normalize_unary_bn(e, a.n);
    Ok(match a.out.format() {
        Format::Json => (pretty(json!({"schema": 1, "exponent": e.to_string(), "n": a.n, "normalForm": r.to_string()})), 0),
        _ => (r.to_string(), 0),
    })
}

fn thue_morse_cmd(a: ThueMorseArgs) -> Outcome {
    const V: &str = "thue-morse";
    no_dot(V, a.out.format())?;
    if a.k > 24 {
        return Err(usage(V, "--k is capped at 24"));
    }
    let w = thue_morse(a.k, 'a', 'b');
    let cube_free = is_cube_free(&w);
    let code = if cube_free { 0 } else { 1 };
    Ok(match a.out.format() {
        Format::Json => (pretty(json!({"schema": 1, "k": a.k, "word": w, "length": w.len(), "cubeFree": cube_free})), code),
        _ => (format!("{w}\n{}\n", if cube_free { "cube-free" } else { "contains a cube" }), code),
    })
}
