//! Space and pair definition files.
//!
//! A space file is a list of `key = value` lines; `#` starts a comment.
//!
//! ```text
//! name = "flat"
//! dimension = 4
//! domain = [-1, 1]
//! domain[2] = [0.5, 2]
//! exclude = "0.01 - x1^2"
//! g[1][1] = "1"
//! F[1][2] = "-1"
//! connection[1][2][3] = "x2"
//! ```
//!
//! Indices are 1-based. Unlisted `g` and `F` components are 0, but every
//! diagonal `g[i][i]` must be given once any `g` key appears. A point is
//! excluded from sampling where an `exclude` expression is positive or cannot
//! be evaluated. `connection = "mapped"` (pair files only) builds the
//! connection from the other block and the `[mapping]` section.
//!
//! A pair file has optional preamble keys (`name`, `dimension`, `domain`,
//! `exclude`) followed by `[source]`, `[target]` and optionally `[mapping]`
//! with `psi[i]` and `xi[i][j][k]`. The mapping always describes
//! `Γ̄ - Γ = ψδ + δψ + ξ` from source to target.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use gkverify_core::geomap::{build_mapped_connection, Deformation, Overlay};
use gkverify_core::{Expr, MapDirection, Space, TensorField, Valence, MAX_DIM};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct DefError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, DefError> {
    Err(DefError {
        line,
        message: message.into(),
    })
}

/// Sampling box `[lo_a, hi_a]` per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Domain {
            lo: vec![lo; n],
            hi: vec![hi; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionDef {
    FromMetric,
    Explicit(TensorField),
    Mapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceDef {
    pub name: Option<String>,
    pub dimension: usize,
    pub domain: Option<Domain>,
    pub excludes: Vec<Expr>,
    pub metric: Option<TensorField>,
    pub structure: Option<TensorField>,
    pub connection: ConnectionDef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingDef {
    pub psi: TensorField,
    pub xi: TensorField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDef {
    pub name: Option<String>,
    pub domain: Option<Domain>,
    pub excludes: Vec<Expr>,
    pub source: SpaceDef,
    pub target: SpaceDef,
    pub mapping: Option<MappingDef>,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Text(String),
    Range(f64, f64),
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    key: String,
    indices: Vec<usize>,
    value: Value,
}

impl Entry {
    fn label(&self) -> String {
        let mut s = self.key.clone();
        for i in &self.indices {
            let _ = write!(s, "[{i}]");
        }
        s
    }
}

fn parse_key(line: usize, text: &str) -> Result<(String, Vec<usize>), DefError> {
    let text = text.trim();
    let (name, mut rest) = match text.find('[') {
        Some(at) => (&text[..at], &text[at..]),
        None => (text, ""),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return err(line, format!("malformed key `{text}`"));
    }
    let mut indices = Vec::new();
    while !rest.is_empty() {
        let Some(close) = rest.find(']') else {
            return err(line, format!("unclosed index in `{text}`"));
        };
        if !rest.starts_with('[') {
            return err(line, format!("malformed key `{text}`"));
        }
        let idx: usize = rest[1..close]
            .trim()
            .parse()
            .map_err(|_| DefError {
                line,
                message: format!("index `{}` in `{text}` is not a positive integer", &rest[1..close]),
            })?;
        indices.push(idx);
        rest = rest[close + 1..].trim_start();
    }
    Ok((name.to_owned(), indices))
}

fn parse_number(line: usize, text: &str) -> Result<f64, DefError> {
    text.trim().parse().map_err(|_| DefError {
        line,
        message: format!("`{}` is not a number", text.trim()),
    })
}

fn parse_value(line: usize, text: &str) -> Result<Value, DefError> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('"') {
        return match inner.strip_suffix('"') {
            Some(s) if !s.contains('"') => Ok(Value::Text(s.to_owned())),
            _ => err(line, "unterminated string"),
        };
    }
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            return err(line, "a range is written `[lo, hi]`");
        }
        let (lo, hi) = (parse_number(line, parts[0])?, parse_number(line, parts[1])?);
        if !(lo < hi) {
            return err(line, format!("empty range [{lo}, {hi}]"));
        }
        return Ok(Value::Range(lo, hi));
    }
    text.parse().map(Value::Int).map_err(|_| DefError {
        line,
        message: format!("cannot read value `{text}` (expressions must be quoted)"),
    })
}

/// Lines grouped by section; the preamble is the `""` section.
fn lex(text: &str) -> Result<Vec<(String, usize, Vec<Entry>)>, DefError> {
    let mut sections = vec![(String::new(), 0, Vec::new())];
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        }
        .trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim();
            if !matches!(name, "source" | "target" | "mapping") {
                return err(line, format!("unknown section [{name}]"));
            }
            if sections.iter().any(|(s, _, _)| s == name) {
                return err(line, format!("section [{name}] appears twice"));
            }
            sections.push((name.to_owned(), line, Vec::new()));
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return err(line, "expected `key = value`");
        };
        let (key, indices) = parse_key(line, k)?;
        let value = parse_value(line, v)?;
        sections.last_mut().unwrap().2.push(Entry {
            line,
            key,
            indices,
            value,
        });
    }
    Ok(sections)
}

fn text_of(e: &Entry) -> Result<&str, DefError> {
    match &e.value {
        Value::Text(s) => Ok(s),
        _ => err(e.line, format!("{} expects a quoted string", e.label())),
    }
}

fn expr_of(e: &Entry, n: usize) -> Result<Expr, DefError> {
    Expr::parse(text_of(e)?, n).map_err(|p| DefError {
        line: e.line,
        message: format!("{}: {p}", e.label()),
    })
}

fn dimension_of(entries: &[Entry], inherited: Option<usize>, line: usize) -> Result<usize, DefError> {
    let mut found = None;
    for e in entries.iter().filter(|e| e.key == "dimension") {
        let n = match e.value {
            Value::Int(n) if e.indices.is_empty() => n,
            _ => return err(e.line, "dimension expects an integer"),
        };
        if !(2..=MAX_DIM as i64).contains(&n) {
            return err(e.line, format!("dimension {n} outside 2..={MAX_DIM}"));
        }
        if found.replace(n as usize).is_some() {
            return err(e.line, "dimension given twice");
        }
    }
    if let (Some(a), Some(b)) = (found, inherited) {
        if a != b {
            return err(line, format!("dimension {a} differs from the enclosing {b}"));
        }
    }
    found.or(inherited).ok_or(DefError {
        line,
        message: "missing `dimension`".into(),
    })
}

/// Flattened index of 1-based `indices`, checked against `rank` and `n`.
fn flat_index(e: &Entry, rank: usize, n: usize) -> Result<usize, DefError> {
    if e.indices.len() != rank {
        return err(
            e.line,
            format!("{} needs {rank} indices, found {}", e.label(), e.indices.len()),
        );
    }
    let mut flat = 0;
    for &i in &e.indices {
        if !(1..=n).contains(&i) {
            return err(e.line, format!("{}: index {i} out of range 1..={n}", e.label()));
        }
        flat = flat * n + (i - 1);
    }
    Ok(flat)
}

struct FieldBuilder {
    valence: Valence,
    exprs: Vec<Option<Expr>>,
    seen: bool,
}

impl FieldBuilder {
    fn new(n: usize, valence: Valence) -> Self {
        FieldBuilder {
            valence,
            exprs: vec![None; n.pow(valence.rank() as u32)],
            seen: false,
        }
    }

    fn set(&mut self, e: &Entry, n: usize) -> Result<(), DefError> {
        let at = flat_index(e, self.valence.rank(), n)?;
        if self.exprs[at].is_some() {
            return err(e.line, format!("{} given twice", e.label()));
        }
        self.exprs[at] = Some(expr_of(e, n)?);
        self.seen = true;
        Ok(())
    }

    fn build(self, n: usize) -> Option<TensorField> {
        self.seen.then(|| {
            let exprs = self
                .exprs
                .into_iter()
                .map(|e| e.unwrap_or_else(|| Expr::constant(n, 0.0)))
                .collect();
            TensorField::from_exprs(n, self.valence, exprs).expect("shape checked")
        })
    }
}

fn read_domain(domain: &mut Option<Domain>, e: &Entry, n: usize) -> Result<(), DefError> {
    let Value::Range(lo, hi) = e.value else {
        return err(e.line, format!("{} expects `[lo, hi]`", e.label()));
    };
    let d = domain.get_or_insert_with(|| Domain::cube(n, -1.0, 1.0));
    match e.indices.as_slice() {
        [] => {
            d.lo.iter_mut().for_each(|v| *v = lo);
            d.hi.iter_mut().for_each(|v| *v = hi);
        }
        [a] if (1..=n).contains(a) => {
            d.lo[a - 1] = lo;
            d.hi[a - 1] = hi;
        }
        _ => return err(e.line, format!("{}: bad coordinate index", e.label())),
    }
    Ok(())
}

fn space_block(
    entries: &[Entry],
    inherited_dim: Option<usize>,
    start_line: usize,
    allow_mapped: bool,
) -> Result<SpaceDef, DefError> {
    let n = dimension_of(entries, inherited_dim, start_line)?;
    let mut name = None;
    let mut domain = None;
    let mut excludes = Vec::new();
    let mut metric = FieldBuilder::new(n, Valence::new(0, 2));
    let mut structure = FieldBuilder::new(n, Valence::new(1, 1));
    let mut connection = FieldBuilder::new(n, Valence::new(1, 2));
    let mut mapped = None;
    for e in entries {
        match e.key.as_str() {
            "dimension" => {}
            "name" => {
                if name.replace(text_of(e)?.to_owned()).is_some() {
                    return err(e.line, "name given twice");
                }
            }
            "domain" => read_domain(&mut domain, e, n)?,
            "exclude" => excludes.push(expr_of(e, n)?),
            "g" => metric.set(e, n)?,
            "F" => structure.set(e, n)?,
            "connection" if e.indices.is_empty() => {
                if text_of(e)? != "mapped" || !allow_mapped {
                    return err(e.line, "`connection = \"mapped\"` is only valid in a pair file");
                }
                mapped = Some(e.line);
            }
            "connection" => connection.set(e, n)?,
            other => return err(e.line, format!("unknown key `{other}`")),
        }
    }
    if metric.seen {
        for i in 0..n {
            if metric.exprs[i * n + i].is_none() {
                return err(start_line, format!("g[{0}][{0}] missing; diagonal entries are required", i + 1));
            }
        }
    }
    let connection = match (mapped, connection.seen) {
        (Some(line), true) => return err(line, "a mapped block cannot list connection components"),
        (Some(_), false) => ConnectionDef::Mapped,
        (None, true) => ConnectionDef::Explicit(connection.build(n).unwrap()),
        (None, false) => ConnectionDef::FromMetric,
    };
    let metric = metric.build(n);
    if connection == ConnectionDef::FromMetric && metric.is_none() {
        return err(start_line, "no metric and no connection given");
    }
    Ok(SpaceDef {
        name,
        dimension: n,
        domain,
        excludes,
        metric,
        structure: structure.build(n),
        connection,
    })
}

pub fn parse_space(text: &str) -> Result<SpaceDef, DefError> {
    let sections = lex(text)?;
    if let Some((name, line, _)) = sections.get(1) {
        return err(*line, format!("section [{name}] in a space file"));
    }
    space_block(&sections[0].2, None, 1, false)
}

pub fn parse_pair(text: &str) -> Result<PairDef, DefError> {
    let sections = lex(text)?;
    let mut pre_name = None;
    let mut pre_dim = None;
    let mut pre_domain = None;
    let mut pre_excludes = Vec::new();
    let preamble = &sections[0].2;
    if preamble.iter().any(|e| e.key == "dimension") {
        pre_dim = Some(dimension_of(preamble, None, 1)?);
    }
    let mut blocks: BTreeMap<&str, (usize, &[Entry])> = BTreeMap::new();
    for (name, line, entries) in &sections[1..] {
        blocks.insert(name.as_str(), (*line, entries.as_slice()));
    }
    let block = |name: &str| {
        blocks.get(name).copied().ok_or(DefError {
            line: 0,
            message: format!("missing section [{name}]"),
        })
    };
    let (sl, se) = block("source")?;
    let source = space_block(se, pre_dim, sl, true)?;
    let n = source.dimension;
    let (tl, te) = block("target")?;
    let target = space_block(te, Some(n), tl, true)?;
    for e in preamble {
        match e.key.as_str() {
            "dimension" => {}
            "name" => pre_name = Some(text_of(e)?.to_owned()),
            "domain" => read_domain(&mut pre_domain, e, n)?,
            "exclude" => pre_excludes.push(expr_of(e, n)?),
            other => return err(e.line, format!("unknown preamble key `{other}`")),
        }
    }
    let mapping = match blocks.get("mapping") {
        None => None,
        Some(&(_, entries)) => Some(mapping_from(entries.iter(), n)?),
    };
    let mapped = [&source, &target]
        .iter()
        .filter(|s| s.connection == ConnectionDef::Mapped)
        .count();
    if mapped == 2 {
        return err(tl, "source and target cannot both be mapped");
    }
    if mapped == 1 && mapping.is_none() {
        return err(0, "a mapped block needs a [mapping] section");
    }
    Ok(PairDef {
        name: pre_name,
        domain: pre_domain,
        excludes: pre_excludes,
        source,
        target,
        mapping,
    })
}

/// A deformation file: `psi[i]` and `xi[i][j][k]` keys, optionally under a
/// `[mapping]` header.
pub fn parse_mapping(text: &str, n: usize) -> Result<MappingDef, DefError> {
    let sections = lex(text)?;
    let mut entries: Vec<&Entry> = sections[0].2.iter().collect();
    for (name, line, rest) in &sections[1..] {
        if name != "mapping" {
            return err(*line, format!("section [{name}] in a mapping file"));
        }
        entries.extend(rest);
    }
    mapping_from(entries.into_iter(), n)
}

fn mapping_from<'a>(entries: impl Iterator<Item = &'a Entry>, n: usize) -> Result<MappingDef, DefError> {
    let mut psi = FieldBuilder::new(n, Valence::new(0, 1));
    let mut xi = FieldBuilder::new(n, Valence::new(1, 2));
    for e in entries {
        match e.key.as_str() {
            "psi" => psi.set(e, n)?,
            "xi" => xi.set(e, n)?,
            other => return err(e.line, format!("unknown mapping key `{other}`")),
        }
    }
    Ok(MappingDef {
        psi: psi.build(n).unwrap_or_else(|| TensorField::zeros(n, Valence::new(0, 1))),
        xi: xi.build(n).unwrap_or_else(|| TensorField::zeros(n, Valence::new(1, 2))),
    })
}

impl SpaceDef {
    pub fn domain(&self) -> Domain {
        self.domain
            .clone()
            .unwrap_or_else(|| Domain::cube(self.dimension, -1.0, 1.0))
    }

    fn display_name(&self, fallback: &str) -> String {
        self.name.clone().unwrap_or_else(|| fallback.to_owned())
    }

    /// The space, for definitions that do not depend on another block.
    pub fn build(&self, fallback_name: &str) -> anyhow::Result<Space> {
        let name = self.display_name(fallback_name);
        let mut space = match &self.connection {
            ConnectionDef::FromMetric => {
                Space::from_metric(name, self.metric.clone().expect("checked at parse"))?
            }
            ConnectionDef::Explicit(c) => {
                let s = Space::from_connection(name, c.clone())?;
                match &self.metric {
                    Some(g) => s.with_metric(g.clone())?,
                    None => s,
                }
            }
            ConnectionDef::Mapped => anyhow::bail!("{name}: a mapped connection needs a pair file"),
        };
        if let Some(f) = &self.structure {
            space = space.with_structure(f.clone())?;
        }
        Ok(space)
    }
}

impl PairDef {
    pub fn dim(&self) -> usize {
        self.source.dimension
    }

    /// Preamble domain, else the source's, else `[-1, 1]^N`.
    pub fn domain(&self) -> Domain {
        self.domain.clone().unwrap_or_else(|| self.source.domain())
    }

    pub fn all_excludes(&self) -> Vec<Expr> {
        let mut all = self.excludes.clone();
        all.extend(self.source.excludes.iter().cloned());
        all.extend(self.target.excludes.iter().cloned());
        all
    }

    /// Source and target spaces; a mapped block is built from the other one,
    /// with `ξ` checked for antisymmetry at `check_points`.
    pub fn build(&self, check_points: &[Vec<f64>]) -> anyhow::Result<(Space, Space)> {
        let mapped = |base: &Space, block: &SpaceDef, fallback: &str, direction| {
            let m = self.mapping.as_ref().expect("checked at parse");
            build_mapped_connection(
                base,
                Deformation::new(m.psi.clone(), m.xi.clone())?,
                direction,
                Overlay {
                    name: Some(block.display_name(fallback)),
                    metric: block.metric.clone(),
                    structure: block.structure.clone(),
                },
                check_points,
            )
            .map_err(anyhow::Error::from)
        };
        Ok(match (&self.source.connection, &self.target.connection) {
            (ConnectionDef::Mapped, _) => {
                let target = self.target.build("target")?;
                let source = mapped(&target, &self.source, "source", MapDirection::Backward)?;
                (source, target)
            }
            (_, ConnectionDef::Mapped) => {
                let source = self.source.build("source")?;
                let target = mapped(&source, &self.target, "target", MapDirection::Forward)?;
                (source, target)
            }
            _ => (self.source.build("source")?, self.target.build("target")?),
        })
    }
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn write_field(out: &mut String, key: &str, field: &TensorField) {
    let n = field.dim();
    let rank = field.valence().rank();
    let mut idx = vec![0; rank];
    for flat in 0..n.pow(rank as u32) {
        let mut rest = flat;
        for slot in (0..rank).rev() {
            idx[slot] = rest % n;
            rest /= n;
        }
        let e = field.get(&idx);
        if e.is_zero() {
            continue;
        }
        out.push_str(key);
        for i in &idx {
            let _ = write!(out, "[{}]", i + 1);
        }
        let _ = writeln!(out, " = {}", quote(&e.to_string()));
    }
}

fn write_domain(out: &mut String, d: &Domain) {
    let uniform = d.lo.iter().all(|&v| v == d.lo[0]) && d.hi.iter().all(|&v| v == d.hi[0]);
    if uniform {
        let _ = writeln!(out, "domain = [{}, {}]", d.lo[0], d.hi[0]);
    } else {
        for a in 0..d.dim() {
            let _ = writeln!(out, "domain[{}] = [{}, {}]", a + 1, d.lo[a], d.hi[a]);
        }
    }
}

fn write_block(out: &mut String, s: &SpaceDef, with_dimension: bool) {
    if let Some(name) = &s.name {
        let _ = writeln!(out, "name = {}", quote(name));
    }
    if with_dimension {
        let _ = writeln!(out, "dimension = {}", s.dimension);
    }
    if let Some(d) = &s.domain {
        write_domain(out, d);
    }
    for e in &s.excludes {
        let _ = writeln!(out, "exclude = {}", quote(&e.to_string()));
    }
    if let Some(g) = &s.metric {
        // Diagonal entries are mandatory, so zeros there are written out.
        for i in 0..s.dimension {
            if g.get(&[i, i]).is_zero() {
                let _ = writeln!(out, "g[{0}][{0}] = \"0\"", i + 1);
            }
        }
        write_field(out, "g", g);
    }
    if let Some(f) = &s.structure {
        write_field(out, "F", f);
    }
    match &s.connection {
        ConnectionDef::FromMetric => {}
        ConnectionDef::Explicit(c) => write_field(out, "connection", c),
        ConnectionDef::Mapped => out.push_str("connection = \"mapped\"\n"),
    }
}

pub fn write_space(s: &SpaceDef) -> String {
    let mut out = String::new();
    write_block(&mut out, s, true);
    out
}

pub fn write_pair(p: &PairDef) -> String {
    let mut out = String::new();
    if let Some(name) = &p.name {
        let _ = writeln!(out, "name = {}", quote(name));
    }
    let _ = writeln!(out, "dimension = {}", p.dim());
    if let Some(d) = &p.domain {
        write_domain(&mut out, d);
    }
    for e in &p.excludes {
        let _ = writeln!(out, "exclude = {}", quote(&e.to_string()));
    }
    out.push_str("\n[source]\n");
    write_block(&mut out, &p.source, false);
    out.push_str("\n[target]\n");
    write_block(&mut out, &p.target, false);
    if let Some(m) = &p.mapping {
        out.push_str("\n[mapping]\n");
        write_field(&mut out, "psi", &m.psi);
        write_field(&mut out, "xi", &m.xi);
    }
    out
}
