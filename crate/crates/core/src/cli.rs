//! The `qeuler` command line.
//!
//! Every command prints exact values only: rationals as `num/den` and p-adic numbers as
//! digit expansions truncated to the precision that is actually known.

use std::ffi::OsString;
use std::fmt::Display;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::dirichlet::Character;
use crate::error::{Error, Result};
use crate::euler::{
    classical_euler_table, functional_equation_closed_residual, generalized_q_euler, generalized_q_euler_closed,
    q_euler_closed, q_euler_integral, q_euler_poly, q_euler_poly_integral,
};
use crate::integral::{
    check_functional_equation, integrate, BracketPower, IntegralResult, IntegrateOptions, TwistedBracketPower,
};
use crate::measure::MeasureContext;
use crate::qnum::QContext;
use crate::scalar::padic::agreement;
use crate::scalar::{rational, Backend, PadicBackend, PadicScalar, RationalBackend};
use crate::series::{build_egf, check_q_difference, CONSTANT_NOTE};

/// Digits carried beyond the requested precision by p-adic level sums.
const SUM_GUARD: i64 = 4;
const MAX_GUARD: i64 = 1 << 14;

#[derive(Parser, Debug)]
#[command(
    name = "qeuler",
    version,
    about = "q-Euler numbers from the fermionic p-adic q-integral"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed form and integral of [x]_q^m for a range of m.
    Euler(EulerArgs),
    /// q-Euler polynomials E_{n,q}(x) at a nonnegative integer x.
    EulerPoly(EulerPolyArgs),
    /// Character-twisted numbers E_{m,chi,q}.
    EulerChi(EulerChiArgs),
    /// Classical Euler numbers (the q = 1 values).
    Classical(ClassicalArgs),
    /// Measures of all balls a + d p^N Z_p.
    Measure(MeasureArgs),
    /// Fermionic q-integral of an integrand.
    Integrate(IntegrateArgs),
    /// Verify an identity over a grid of cases.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Rational,
    Padic,
}

impl BackendKind {
    fn name(self) -> &'static str {
        match self {
            BackendKind::Rational => "rational",
            BackendKind::Padic => "padic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Distribution,
    Feq,
    Qdiff,
    Mass,
    Limit,
}

#[derive(Args, Debug)]
struct Common {
    /// Odd prime p.
    #[arg(long)]
    p: u64,
    /// q as an integer or num/den.
    #[arg(long, allow_hyphen_values = true)]
    q: String,
    #[arg(long, value_enum, default_value_t = BackendKind::Rational)]
    backend: BackendKind,
    /// p-adic digits M.
    #[arg(long, default_value_t = 6)]
    prec: i64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct EulerArgs {
    #[command(flatten)]
    common: Common,
    /// Degrees, `a..b` (inclusive) or a single value.
    #[arg(long, default_value = "0..5")]
    m: String,
    /// Highest level of the Riemann sums.
    #[arg(long = "N-max")]
    n_max: Option<u32>,
}

#[derive(Args, Debug)]
struct EulerPolyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "0..5")]
    m: String,
    #[arg(long, default_value_t = 0)]
    x: u64,
    #[arg(long = "N-max")]
    n_max: Option<u32>,
}

#[derive(Args, Debug)]
struct EulerChiArgs {
    #[command(flatten)]
    common: Common,
    /// Character table `d:v0,v1,...` with values 0, 1, -1 or zeta(n,k).
    #[arg(long, allow_hyphen_values = true)]
    chi: String,
    #[arg(long, default_value = "0..4")]
    m: String,
    #[arg(long = "N-max")]
    n_max: Option<u32>,
}

#[derive(Args, Debug)]
struct ClassicalArgs {
    #[arg(long, default_value = "0..10")]
    m: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    d: u64,
    #[arg(long = "N", default_value_t = 1)]
    level: u32,
}

#[derive(Args, Debug)]
struct IntegrateArgs {
    #[command(flatten)]
    common: Common,
    /// `bracket^m`, `bracket_shift(x)^n` or `chi(d:...)*bracket^m`.
    #[arg(long = "f")]
    integrand: String,
    /// Modulus d of X; defaults to the character modulus.
    #[arg(long)]
    d: Option<u64>,
    #[arg(long = "N-max")]
    n_max: Option<u32>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(value_enum)]
    which: CheckKind,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    d: u64,
    /// Highest level (distribution, mass) or exponent N in q^(p^N) (limit).
    #[arg(long = "N")]
    level: Option<u32>,
    #[arg(long, default_value = "0..6")]
    m: String,
    /// Truncation order of the generating function.
    #[arg(long = "K", default_value_t = 12)]
    order: u32,
    #[arg(long = "N-max")]
    n_max: Option<u32>,
}

/// What a command wrote and how the process should exit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Exit code for an error: 3 when a limit did not stabilize, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => 3,
        _ => 2,
    }
}

pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            return if code == 0 {
                Output {
                    stdout: text,
                    ..Output::default()
                }
            } else {
                Output {
                    stderr: text,
                    code,
                    ..Output::default()
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(out) => out,
        Err(e) => Output {
            stderr: format!("error: {e}\n"),
            code: exit_code(&e),
            ..Output::default()
        },
    }
}

fn dispatch(command: Command) -> Result<Output> {
    match command {
        Command::Euler(a) => cmd_euler(a),
        Command::EulerPoly(a) => cmd_euler_poly(a),
        Command::EulerChi(a) => cmd_euler_chi(a),
        Command::Classical(a) => cmd_classical(a),
        Command::Measure(a) => cmd_measure(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Check(a) => cmd_check(a),
    }
}

/// Parses `a..b`, `a..=b` (both inclusive) or `a`.
pub fn parse_range(s: &str) -> Result<Vec<u32>> {
    let num = |t: &str, pos: usize| -> Result<u32> {
        t.trim()
            .parse()
            .map_err(|_| Error::parse(pos, format!("expected a nonnegative integer, found {t:?}")))
    };
    match s.split_once("..") {
        None => Ok(vec![num(s, 0)?]),
        Some((lo, hi)) => {
            let start = num(lo, 0)?;
            let hi_pos = lo.len() + 2;
            let (hi, hi_pos) = match hi.strip_prefix('=') {
                Some(h) => (h, hi_pos + 1),
                None => (hi, hi_pos),
            };
            let end = num(hi, hi_pos)?;
            if end < start {
                return Err(Error::parse(hi_pos, format!("empty range {s:?}")));
            }
            Ok((start..=end).collect())
        }
    }
}

/// A parsed integrand.
#[derive(Clone, Debug, PartialEq)]
pub enum IntegrandSpec {
    /// `[x + shift]_q^exponent`.
    Bracket { shift: u64, exponent: u32 },
    /// `chi(x) [x]_q^exponent`.
    Twisted { chi: Character, exponent: u32 },
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(Error::parse(self.pos, format!("expected {lit:?}")))
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        let text = &self.rest()[..digits];
        let n = text
            .parse()
            .map_err(|_| Error::parse(self.pos, "expected a nonnegative integer"))?;
        self.pos += digits;
        Ok(n)
    }

    fn exponent(&mut self) -> Result<u32> {
        if !self.eat("^") {
            return Ok(1);
        }
        let pos = self.pos;
        u32::try_from(self.number()?).map_err(|_| Error::parse(pos, "exponent too large"))
    }
}

pub fn parse_integrand(s: &str) -> Result<IntegrandSpec> {
    let mut c = Cursor { src: s, pos: 0 };
    let spec = if c.eat("chi(") {
        let start = c.pos;
        let mut depth = 1usize;
        let mut end = None;
        for (i, ch) in c.rest().char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(start + i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let end = end.ok_or_else(|| Error::parse(s.len(), "unclosed \"chi(\""))?;
        let chi = Character::parse(&s[start..end]).map_err(|e| match e {
            Error::Parse { position, message } => Error::parse(start + position, message),
            other => other,
        })?;
        c.pos = end + 1;
        c.expect("*")?;
        c.expect("bracket")?;
        if c.rest().starts_with("_shift") {
            return Err(Error::parse(c.pos, "a character twist takes the plain bracket"));
        }
        IntegrandSpec::Twisted {
            chi,
            exponent: c.exponent()?,
        }
    } else if c.eat("bracket_shift(") {
        let shift = c.number()?;
        c.expect(")")?;
        IntegrandSpec::Bracket {
            shift,
            exponent: c.exponent()?,
        }
    } else if c.eat("bracket") {
        IntegrandSpec::Bracket {
            shift: 0,
            exponent: c.exponent()?,
        }
    } else {
        c.skip_ws();
        return Err(Error::parse(
            c.pos,
            "expected \"bracket\", \"bracket_shift(\" or \"chi(\"",
        ));
    };
    c.skip_ws();
    if c.pos != s.len() {
        return Err(Error::parse(c.pos, "unexpected trailing input"));
    }
    Ok(spec)
}

/// A closed-form value in the backend the user chose.
#[derive(Clone, Debug)]
enum Exact {
    Rational(BigRational),
    Padic(PadicScalar),
}

impl Exact {
    fn render(&self) -> String {
        match self {
            Exact::Rational(r) => rational::render(r),
            Exact::Padic(x) => x.to_string(),
        }
    }

    fn to_padic(&self, p: u64, prec: i64) -> Result<PadicScalar> {
        match self {
            Exact::Rational(r) => PadicScalar::from_big_rational(r, p, prec),
            Exact::Padic(x) => Ok(x.reduce_precision(prec)),
        }
    }

    fn vanishes(&self, prec: i64) -> bool {
        match self {
            Exact::Rational(r) => r.is_zero(),
            Exact::Padic(x) => x.valuation().lower_bound() >= prec,
        }
    }

    fn valuation(&self, p: u64) -> String {
        match self {
            Exact::Rational(r) => rational::valuation(r, p).to_string(),
            Exact::Padic(x) => x.valuation().to_string(),
        }
    }
}

/// Runs `f` in Q_p with growing guard digits until the result carries `prec` digits.
fn with_guard<T>(
    p: u64,
    q: &BigRational,
    prec: i64,
    f: impl Fn(&QContext<PadicBackend>) -> Result<T>,
    known: impl Fn(&T) -> i64,
) -> Result<T> {
    let mut guard = 8;
    loop {
        let ctx = QContext::from_rational(PadicBackend::new(p, prec + guard)?, q)?;
        let value = f(&ctx)?;
        if known(&value) >= prec || guard >= MAX_GUARD {
            return Ok(value);
        }
        guard *= 2;
    }
}

fn exact_value(
    kind: BackendKind,
    p: u64,
    q: &BigRational,
    prec: i64,
    rat: impl Fn(&QContext<RationalBackend>) -> Result<BigRational>,
    pad: impl Fn(&QContext<PadicBackend>) -> Result<PadicScalar>,
) -> Result<Exact> {
    match kind {
        BackendKind::Rational => Ok(Exact::Rational(rat(&QContext::from_rational(
            RationalBackend::new(p)?,
            q,
        )?)?)),
        BackendKind::Padic => {
            let x = with_guard(p, q, prec, pad, PadicScalar::precision)?;
            Ok(Exact::Padic(x.reduce_precision(prec)))
        }
    }
}

fn padic_ctx(p: u64, q: &BigRational, prec: i64) -> Result<QContext<PadicBackend>> {
    QContext::from_rational(PadicBackend::new(p, prec + SUM_GUARD)?, q)
}

fn options(prec: i64, n_max: Option<u32>) -> IntegrateOptions {
    let opts = IntegrateOptions::new(prec);
    match n_max {
        Some(n) => opts.with_max_level(n),
        None => opts,
    }
}

fn render_integral(r: &IntegralResult<PadicScalar>) -> String {
    r.value.reduce_precision(r.achieved_precision.max(0)).to_string()
}

fn agree(closed: &PadicScalar, r: &IntegralResult<PadicScalar>) -> i64 {
    agreement(closed, &r.value).min(r.achieved_precision)
}

struct Settings {
    p: u64,
    q: BigRational,
    kind: BackendKind,
    prec: i64,
    format: Format,
}

impl Settings {
    fn new(c: &Common) -> Result<Self> {
        crate::scalar::check_odd_prime(c.p)?;
        if c.prec < 1 {
            return Err(Error::domain(format!("precision must be at least 1, got {}", c.prec)));
        }
        Ok(Settings {
            p: c.p,
            q: rational::parse(&c.q)?,
            kind: c.backend,
            prec: c.prec,
            format: c.format,
        })
    }

    fn meta(&self) -> Vec<(String, Value)> {
        vec![
            ("p".into(), json!(self.p)),
            ("q".into(), json!(rational::render(&self.q))),
            ("backend".into(), json!(self.kind.name())),
        ]
    }
}

/// Rows plus the settings they were computed with; rendered as text, JSON or CSV.
struct Report {
    meta: Vec<(String, Value)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    /// Emit the single row as top-level fields instead of a `results` array.
    flat: bool,
    footer: Vec<String>,
}

impl Report {
    fn new(meta: Vec<(String, Value)>, columns: Vec<&'static str>) -> Self {
        Report {
            meta,
            columns,
            rows: Vec::new(),
            flat: false,
            footer: Vec::new(),
        }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Csv => self.csv(),
            Format::Text => self.text(),
        }
    }

    fn row_object(&self, row: &[Value]) -> Map<String, Value> {
        self.columns
            .iter()
            .zip(row)
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    fn json(&self) -> String {
        let mut obj: Map<String, Value> = self.meta.iter().cloned().collect();
        if self.flat && self.rows.len() == 1 {
            obj.extend(self.row_object(&self.rows[0]));
        } else {
            let rows = self.rows.iter().map(|r| Value::Object(self.row_object(r))).collect();
            obj.insert("results".into(), Value::Array(rows));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values serialize");
        s.push('\n');
        s
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 output")
    }

    fn text(&self) -> String {
        let mut out = String::new();
        let head: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k} = {}", cell(v))).collect();
        out.push_str(&head.join(", "));
        out.push('\n');
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| {
                cells
                    .iter()
                    .map(|r| r[i].len())
                    .chain([self.columns[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |items: Vec<&str>| {
            let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            format!("{}\n", padded.join("  ").trim_end())
        };
        out.push_str(&line(self.columns.clone()));
        for r in &cells {
            out.push_str(&line(r.iter().map(String::as_str).collect()));
        }
        for f in &self.footer {
            out.push_str(f);
            out.push('\n');
        }
        out
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn shown<T: Display>(x: T) -> Value {
    Value::String(x.to_string())
}

fn finish(report: Report, format: Format, not_converged: Option<String>) -> Output {
    let stdout = report.render(format);
    match not_converged {
        Some(msg) => Output {
            stdout,
            stderr: format!("NOT-CONVERGED: {msg}\n"),
            code: 3,
        },
        None => Output {
            stdout,
            ..Output::default()
        },
    }
}

fn singular_q_one(q: &BigRational) -> Result<()> {
    if q.is_one() {
        return Err(Error::domain(
            "q = 1 is a singular point of the closed form (the factor 1 - q vanishes); \
             use the `classical` subcommand for the q = 1 values",
        ));
    }
    Ok(())
}

fn cmd_euler(a: EulerArgs) -> Result<Output> {
    let s = Settings::new(&a.common)?;
    let ms = parse_range(&a.m)?;
    singular_q_one(&s.q)?;
    let ctx = padic_ctx(s.p, &s.q, s.prec)?;
    let opts = options(s.prec, a.n_max);
    let mut report = Report::new(s.meta(), vec!["m", "closed", "integral", "agree_valuation"]);
    let mut stalled = None;
    for m in ms {
        let closed = exact_value(
            s.kind,
            s.p,
            &s.q,
            s.prec,
            |c| q_euler_closed(m, c),
            |c| q_euler_closed(m, c),
        )?;
        let r = q_euler_integral(m, &ctx, &opts)?;
        if !r.is_converged() && stalled.is_none() {
            stalled = Some(format!(
                "m = {m}: {} stable digits after {} levels",
                r.achieved_precision, r.levels_used
            ));
        }
        let cp = closed.to_padic(s.p, s.prec)?;
        report.rows.push(vec![
            json!(m),
            json!(closed.render()),
            json!(render_integral(&r)),
            json!(agree(&cp, &r)),
        ]);
    }
    Ok(finish(report, s.format, stalled))
}

fn cmd_euler_poly(a: EulerPolyArgs) -> Result<Output> {
    let s = Settings::new(&a.common)?;
    let ns = parse_range(&a.m)?;
    singular_q_one(&s.q)?;
    let ctx = padic_ctx(s.p, &s.q, s.prec)?;
    let opts = options(s.prec, a.n_max);
    let x = a.x;
    let mut meta = s.meta();
    meta.push(("x".into(), json!(x)));
    let mut report = Report::new(meta, vec!["m", "closed", "integral", "agree_valuation"]);
    let mut stalled = None;
    for n in ns {
        let closed = exact_value(
            s.kind,
            s.p,
            &s.q,
            s.prec,
            |c| q_euler_poly(n, x, c),
            |c| q_euler_poly(n, x, c),
        )?;
        let r = q_euler_poly_integral(n, x, &ctx, &opts)?;
        if !r.is_converged() && stalled.is_none() {
            stalled = Some(format!(
                "n = {n}: {} stable digits after {} levels",
                r.achieved_precision, r.levels_used
            ));
        }
        let cp = closed.to_padic(s.p, s.prec)?;
        report.rows.push(vec![
            json!(n),
            json!(closed.render()),
            json!(render_integral(&r)),
            json!(agree(&cp, &r)),
        ]);
    }
    Ok(finish(report, s.format, stalled))
}

fn cmd_euler_chi(a: EulerChiArgs) -> Result<Output> {
    let s = Settings::new(&a.common)?;
    let ms = parse_range(&a.m)?;
    let chi = Character::parse(&a.chi)?;
    singular_q_one(&s.q)?;
    let ctx = padic_ctx(s.p, &s.q, s.prec)?;
    let opts = options(s.prec, a.n_max);
    let mut meta = s.meta();
    meta.push(("chi".into(), shown(&chi)));
    let mut report = Report::new(meta, vec!["m", "closed", "integral", "agree_valuation"]);
    let mut stalled = None;
    for m in ms {
        let closed = exact_value(
            s.kind,
            s.p,
            &s.q,
            s.prec,
            |c| generalized_q_euler_closed(m, &chi, c),
            |c| generalized_q_euler_closed(m, &chi, c),
        )?;
        let r = generalized_q_euler(m, &chi, &ctx, &opts)?;
        if !r.is_converged() && stalled.is_none() {
            stalled = Some(format!(
                "m = {m}: {} stable digits after {} levels",
                r.achieved_precision, r.levels_used
            ));
        }
        let cp = closed.to_padic(s.p, s.prec)?;
        report.rows.push(vec![
            json!(m),
            json!(closed.render()),
            json!(render_integral(&r)),
            json!(agree(&cp, &r)),
        ]);
    }
    Ok(finish(report, s.format, stalled))
}

fn cmd_classical(a: ClassicalArgs) -> Result<Output> {
    let ms = parse_range(&a.m)?;
    let table = classical_euler_table(*ms.last().unwrap());
    let mut report = Report::new(vec![("q".into(), json!("1"))], vec!["m", "value"]);
    for m in ms {
        report
            .rows
            .push(vec![json!(m), json!(rational::render(&table[m as usize]))]);
    }
    Ok(finish(report, a.format, None))
}

fn measure_rows<B: Backend>(ctx: QContext<B>, d: u64, level: u32) -> Result<Vec<Vec<Value>>> {
    let mc = MeasureContext::new(ctx)?;
    mc.balls(d, level)?
        .iter()
        .map(|ball| Ok(vec![json!(ball.residue()), shown(mc.mu(ball)?)]))
        .collect()
}

fn cmd_measure(a: MeasureArgs) -> Result<Output> {
    let s = Settings::new(&a.common)?;
    let mut meta = s.meta();
    meta.push(("d".into(), json!(a.d)));
    meta.push(("N".into(), json!(a.level)));
    let mut report = Report::new(meta, vec!["a", "measure"]);
    report.rows = match s.kind {
        BackendKind::Rational => {
            measure_rows(QContext::from_rational(RationalBackend::new(s.p)?, &s.q)?, a.d, a.level)?
        }
        BackendKind::Padic => measure_rows(
            QContext::from_rational(PadicBackend::new(s.p, s.prec)?, &s.q)?,
            a.d,
            a.level,
        )?,
    };
    Ok(finish(report, s.format, None))
}

fn cmd_integrate(a: IntegrateArgs) -> Result<Output> {
    let s = Settings::new(&a.common)?;
    let spec = parse_integrand(&a.integrand)?;
    let ctx = padic_ctx(s.p, &s.q, s.prec)?;
    let mut opts = options(s.prec, a.n_max);
    let (result, closed) = match &spec {
        IntegrandSpec::Bracket { shift, exponent } => {
            let (shift, n) = (*shift, *exponent);
            if let Some(d) = a.d {
                opts = opts.with_modulus(d);
            }
            let r = integrate(&BracketPower::shifted(ctx.clone(), shift, n), &ctx, &opts)?;
            let closed = if s.q.is_one() {
                None
            } else {
                Some(exact_value(
                    s.kind,
                    s.p,
                    &s.q,
                    s.prec,
                    |c| q_euler_poly(n, shift, c),
                    |c| q_euler_poly(n, shift, c),
                )?)
            };
            (r, closed)
        }
        IntegrandSpec::Twisted { chi, exponent } => {
            let m = *exponent;
            let d = a.d.unwrap_or(chi.modulus());
            if !d.is_multiple_of(chi.modulus()) {
                return Err(Error::domain(format!(
                    "d = {d} is not a multiple of the character modulus {}",
                    chi.modulus()
                )));
            }
            opts = opts.with_modulus(d);
            let f = TwistedBracketPower::new(ctx.clone(), chi.realize(ctx.backend())?, chi.to_string(), m)?;
            let r = integrate(&f, &ctx, &opts)?;
            let closed = if s.q.is_one() {
                None
            } else {
                Some(exact_value(
                    s.kind,
                    s.p,
                    &s.q,
                    s.prec,
                    |c| generalized_q_euler_closed(m, chi, c),
                    |c| generalized_q_euler_closed(m, chi, c),
                )?)
            };
            (r, closed)
        }
    };
    let mut meta = s.meta();
    meta.push(("f".into(), json!(a.integrand)));
    let mut report = Report::new(
        meta,
        vec![
            "value",
            "valuation",
            "precision",
            "levels",
            "converged",
            "closed",
            "agree_valuation",
        ],
    );
    report.flat = true;
    let shown_value = result.value.reduce_precision(result.achieved_precision.max(0));
    let (closed_s, agree_v) = match &closed {
        Some(c) => (json!(c.render()), json!(agree(&c.to_padic(s.p, s.prec)?, &result))),
        None => (Value::Null, Value::Null),
    };
    report.rows.push(vec![
        json!(shown_value.to_string()),
        json!(shown_value.valuation().lower_bound()),
        json!(result.achieved_precision),
        json!(result.levels_used),
        json!(result.is_converged()),
        closed_s,
        agree_v,
    ]);
    let stalled = (!result.is_converged()).then(|| {
        format!(
            "{} stable digits of {} after {} levels",
            result.achieved_precision, s.prec, result.levels_used
        )
    });
    Ok(finish(report, s.format, stalled))
}

/// One line of a verification report.
struct Case {
    label: String,
    residual: String,
    valuation: String,
    pass: bool,
}

fn vanishes<B: Backend>(b: &B, x: &B::Elem, prec: i64) -> bool {
    if b.is_exact() {
        b.is_zero(x)
    } else {
        b.valuation(x).lower_bound() >= prec
    }
}

fn case<B: Backend>(b: &B, label: String, residual: &B::Elem, prec: i64) -> Case {
    Case {
        label,
        residual: residual.to_string(),
        valuation: b.valuation(residual).to_string(),
        pass: vanishes(b, residual, prec),
    }
}

fn distribution_cases<B: Backend>(ctx: QContext<B>, d: u64, level: u32, prec: i64) -> Result<Vec<Case>> {
    let mc = MeasureContext::new(ctx)?;
    let b = mc.q_context().backend().clone();
    let mut cases = Vec::new();
    for n in 0..=level {
        for ball in mc.balls(d, n)? {
            let r = mc.check_additivity(&ball)?;
            cases.push(case(&b, format!("a={} N={n}", ball.residue()), &r.residual, prec));
        }
    }
    Ok(cases)
}

fn mass_cases<B: Backend>(ctx: QContext<B>, d: u64, level: u32, prec: i64) -> Result<Vec<Case>> {
    let mc = MeasureContext::new(ctx)?;
    let b = mc.q_context().backend().clone();
    (0..=level)
        .map(|n| {
            let residual = b.sub(&mc.total_mass(d, n)?, &b.one());
            Ok(case(&b, format!("N={n}"), &residual, prec))
        })
        .collect()
}

fn qdiff_cases<B: Backend>(ctx: &QContext<B>, order: u32, prec: i64) -> Result<Vec<Case>> {
    let b = ctx.backend();
    let egf = build_egf(ctx, order)?;
    Ok(check_q_difference(&egf, ctx)
        .iter()
        .enumerate()
        .map(|(n, r)| case(b, format!("n={n}"), r, prec))
        .collect())
}

fn feq_cases(s: &Settings, ms: &[u32], n_max: Option<u32>) -> Result<Vec<Case>> {
    let ctx = padic_ctx(s.p, &s.q, s.prec)?;
    let opts = options(s.prec, n_max);
    let mut cases = Vec::new();
    for &m in ms {
        let f = BracketPower::new(ctx.clone(), m);
        let chk = check_functional_equation(&f, &ctx, &opts)?;
        cases.push(Case {
            label: format!("m={m} integral"),
            residual: chk.residual.reduce_precision(chk.certified.max(0)).to_string(),
            valuation: format!(">={}", chk.certified),
            pass: chk.holds_to(s.prec),
        });
        if !s.q.is_one() {
            let r = exact_value(
                s.kind,
                s.p,
                &s.q,
                s.prec,
                |c| functional_equation_closed_residual(m, c),
                |c| functional_equation_closed_residual(m, c),
            )?;
            cases.push(Case {
                label: format!("m={m} closed"),
                residual: r.render(),
                valuation: r.valuation(s.p),
                pass: r.vanishes(s.prec),
            });
        }
    }
    Ok(cases)
}

/// `v_p(q^(p^N) - 1) >= N + v_p(q - 1)` for `N = 0..=level`, computed in Z_p with
/// enough digits to see the bound.
fn limit_cases(s: &Settings, level: u32) -> Result<Vec<Case>> {
    let v0 = rational::valuation(&(&s.q - BigRational::one()), s.p);
    let Some(v0) = v0.finite() else {
        return Ok((0..=level)
            .map(|n| Case {
                label: format!("N={n} bound=inf"),
                residual: "0".into(),
                valuation: "inf".into(),
                pass: true,
            })
            .collect());
    };
    if v0 < 1 {
        return Err(Error::ConvergenceDomain(format!(
            "v_p(q - 1) = {v0}; the bound needs v_p(q - 1) >= 1"
        )));
    }
    (0..=level)
        .map(|n| {
            let bound = n as i64 + v0;
            let q = PadicScalar::from_big_rational(&s.q, s.p, bound + SUM_GUARD)?;
            let e =
                s.p.checked_pow(n)
                    .ok_or_else(|| Error::domain(format!("p^{n} overflows")))?;
            let residual = q.pow(e) - PadicScalar::one(s.p, bound + SUM_GUARD);
            Ok(Case {
                label: format!("N={n} bound={bound}"),
                residual: residual.to_string(),
                valuation: residual.valuation().to_string(),
                pass: residual.valuation().lower_bound() >= bound,
            })
        })
        .collect()
}

fn cmd_check(a: CheckArgs) -> Result<Output> {
    let s = Settings::new(&a.common)?;
    let mut note = None;
    let cases = match a.which {
        CheckKind::Distribution | CheckKind::Mass => {
            let level = a.level.unwrap_or(2);
            let mass = a.which == CheckKind::Mass;
            match s.kind {
                BackendKind::Rational => {
                    let ctx = QContext::from_rational(RationalBackend::new(s.p)?, &s.q)?;
                    if mass {
                        mass_cases(ctx, a.d, level, s.prec)?
                    } else {
                        distribution_cases(ctx, a.d, level, s.prec)?
                    }
                }
                BackendKind::Padic => {
                    let ctx = QContext::from_rational(PadicBackend::new(s.p, s.prec)?, &s.q)?;
                    if mass {
                        mass_cases(ctx, a.d, level, s.prec)?
                    } else {
                        distribution_cases(ctx, a.d, level, s.prec)?
                    }
                }
            }
        }
        CheckKind::Feq => feq_cases(&s, &parse_range(&a.m)?, a.n_max)?,
        CheckKind::Qdiff => {
            note = Some(CONSTANT_NOTE);
            match s.kind {
                BackendKind::Rational => qdiff_cases(
                    &QContext::from_rational(RationalBackend::new(s.p)?, &s.q)?,
                    a.order,
                    s.prec,
                )?,
                BackendKind::Padic => with_guard(
                    s.p,
                    &s.q,
                    s.prec,
                    |c| qdiff_cases(c, a.order, s.prec),
                    |cases| {
                        if cases.iter().all(|c| c.pass) {
                            i64::MAX
                        } else {
                            i64::MIN
                        }
                    },
                )?,
            }
        }
        CheckKind::Limit => limit_cases(&s, a.level.unwrap_or(8))?,
    };
    let which = a.which.to_possible_value().expect("no skipped variants");
    let mut meta = s.meta();
    meta.insert(0, ("check".into(), json!(which.get_name())));
    Ok(check_output(meta, &cases, note, s.format))
}

/// Renders a verification report; exit code 1 and the first counterexample on failure.
fn check_output(mut meta: Vec<(String, Value)>, cases: &[Case], note: Option<&str>, format: Format) -> Output {
    let failure = cases.iter().find(|c| !c.pass);
    meta.push(("pass".into(), json!(failure.is_none())));
    if let Some(n) = note {
        meta.push(("note".into(), json!(n)));
    }
    let mut report = Report::new(meta, vec!["case", "residual", "valuation", "pass"]);
    report.rows = cases
        .iter()
        .map(|c| vec![json!(c.label), json!(c.residual), json!(c.valuation), json!(c.pass)])
        .collect();
    if let Some(n) = note {
        report.footer.push(format!("note: {n}"));
    }
    report.footer.push(match failure {
        None => "PASS".to_string(),
        Some(c) => format!(
            "FAIL: first counterexample {} (residual {}, valuation {})",
            c.label, c.residual, c.valuation
        ),
    });
    let mut out = finish(report, format, None);
    if let Some(c) = failure {
        out.stderr = format!("check failed at {}\n", c.label);
        out.code = 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0..2").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_range("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_range("5").unwrap(), vec![5]);
        assert!(matches!(parse_range("2..x"), Err(Error::Parse { position: 3, .. })));
        assert!(parse_range("4..1").is_err());
    }

    #[test]
    fn integrand_grammar() {
        assert_eq!(
            parse_integrand("bracket^3").unwrap(),
            IntegrandSpec::Bracket { shift: 0, exponent: 3 }
        );
        assert_eq!(
            parse_integrand(" bracket_shift(2)^4 ").unwrap(),
            IntegrandSpec::Bracket { shift: 2, exponent: 4 }
        );
        match parse_integrand("chi(5:0,1,zeta(4,1),zeta(4,3),-1)*bracket^2").unwrap() {
            IntegrandSpec::Twisted { chi, exponent } => {
                assert_eq!(chi.modulus(), 5);
                assert_eq!(exponent, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integrand_errors_carry_positions() {
        assert!(matches!(
            parse_integrand("brackt^2"),
            Err(Error::Parse { position: 0, .. })
        ));
        assert!(matches!(
            parse_integrand("bracket^"),
            Err(Error::Parse { position: 8, .. })
        ));
        assert!(matches!(
            parse_integrand("bracket^2x"),
            Err(Error::Parse { position: 9, .. })
        ));
        assert!(matches!(parse_integrand("chi(3:0,1,-1"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_integrand("chi(3:0,1,q)*bracket"),
            Err(Error::Parse { position: 10, .. })
        ));
        assert!(parse_integrand("chi(3:0,1,-1)*bracket_shift(1)^2").is_err());
    }

    #[test]
    fn failing_check_reports_first_counterexample() {
        let cases = vec![
            Case {
                label: "n=0".into(),
                residual: "0".into(),
                valuation: "inf".into(),
                pass: true,
            },
            Case {
                label: "n=1".into(),
                residual: "3".into(),
                valuation: "1".into(),
                pass: false,
            },
            Case {
                label: "n=2".into(),
                residual: "9".into(),
                valuation: "2".into(),
                pass: false,
            },
        ];
        let out = check_output(vec![], &cases, None, Format::Text);
        assert_eq!(out.code, 1);
        assert!(out
            .stdout
            .contains("FAIL: first counterexample n=1 (residual 3, valuation 1)"));
        assert_eq!(out.stderr, "check failed at n=1\n");
        let ok = check_output(vec![], &cases[..1], None, Format::Json);
        assert_eq!(ok.code, 0);
        assert!(ok.stdout.contains("\"pass\": true"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::domain("x")), 2);
        assert_eq!(
            exit_code(&Error::NotConverged {
                target: 6,
                achieved: 2,
                levels: 2
            }),
            3
        );
    }
}
