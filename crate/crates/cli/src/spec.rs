//! The `shiftdrift-spec v1` structured-text format.
//!
//! A spec file declares shift spaces, automorphisms, calibrated-pair
//! families, cylinders, and run directives, and is the single input format
//! of the command-line tool. The format is line-oriented: `#` starts a
//! comment, blank lines are ignored, and indentation is free. Stanzas
//! nest one level at most.
//!
//! ```text
//! file     := "shiftdrift-spec v1" stanza*
//! stanza   := space | auto | family | cylinder | run
//!
//! space    := "space" NAME "{" space-body "}"
//! space-body :=
//!     "alphabet" "=" NAME ("," NAME)*          # atomic symbols
//!     ( "orbit" "{" ("generator" POINT)* "}"
//!     | "sofic" "{" "states" "=" NAME ("," NAME)*
//!                   ("edge" NAME NAME NAME)* "}" )   # from, symbol, to
//!   | "product" "=" NAME "*" NAME              # no alphabet line
//!
//! auto     := "auto" NAME "{" "space" "=" NAME kind "}"
//! kind     := "shift" "=" INT
//!           | "identity"
//!           | "swap"                            # product of equal halves
//!           | "permute" "{" ("name" "=" NAME)? ("map" NAME "->" NAME)* "}"
//!           | "embed" "{" "name" "=" NAME "radius" "=" UINT
//!                         ("default" "=" INT)? ("jump" WORD "->" INT)* "}"
//!           | "compose" "=" NAME "," NAME       # left applied after right
//!
//! family   := "family" NAME "{" "space" "=" NAME schema* "}"
//! schema   := "pair" POINT "~" POINT            # fixed calibrated pair
//!           | "free-left" POINT "~" POINT       # left slot free, right
//!           | "free-right" POINT "~" POINT      #   slot templates, and
//!                                               #   vice versa
//!
//! cylinder := "cylinder" NAME "{"
//!               "family" "=" NAME "schema" "=" UINT "radius" "=" UINT "}"
//!           | "cylinder" NAME "{" "space" "=" NAME "radius" "=" UINT
//!               ("pair" WORD "~" WORD)* "}"
//!
//! run      := "run" NAME "{" run-line* "}"
//! run-line := "family" "=" NAME
//!           | "autos" "=" NAME ("," NAME)*
//!           | "cylinders" "=" NAME ("," NAME)*
//!           | "stages" "=" UINT | "n-max" "=" UINT
//!           | "extension-step" "=" UINT
//!           | "entropy-threshold" "=" FLOAT     # must be positive
//!           | "entropy-check-len" "=" UINT | "infinite-check-len" "=" UINT
//!           | "verify-len" "=" UINT
//!           | "completeness-radius" "=" (UINT | "none")
//!           | "pair" POINT "~" POINT            # cocycle test pairs
//! ```
//!
//! `NAME` uses the characters `[A-Za-z0-9_.^()\[\]@+-]`. `POINT` is the
//! point literal `|left^omega <core@origin> |right^omega` with
//! comma-separated symbol names; `WORD` is a comma-separated symbol list.
//! All references must be declared earlier in the file. Run settings not
//! present take the pipeline defaults. Embedded jump rules are certified
//! bijective during parsing and their inverses are derived, so only the
//! forward table is ever written.
//!
//! `export_entries` renders gallery entries in this syntax; parsing the
//! result reproduces the entries' objects exactly.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::Arc;

use shiftdrift_core::{
    builtin, embed_marker_rule, parse_point, Alphabet, Automorphism, BlockMap, CAFamily,
    CalibratedPair, Cylinder, Error, GalleryEntry, OrbitCocycle, PairSchema, PipelineConfig,
    Presentation, Result, RuleView, ShiftSpace, Slot, SoficAutomaton, SymbolId, WordPair,
};

/// One `run` stanza with every reference resolved.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub name: String,
    pub family: CAFamily,
    pub autos: Vec<Automorphism>,
    pub cylinders: Vec<Cylinder>,
    pub config: PipelineConfig,
    /// Explicit cocycle test pairs, already calibrated.
    pub pairs: Vec<CalibratedPair>,
}

/// A parsed and fully resolved spec file.
#[derive(Debug, Clone, Default)]
pub struct SpecFile {
    pub spaces: Vec<(String, Arc<ShiftSpace>)>,
    pub autos: Vec<(String, Automorphism)>,
    pub families: Vec<(String, CAFamily)>,
    pub cylinders: Vec<(String, Cylinder)>,
    pub runs: Vec<RunSpec>,
}

impl SpecFile {
    pub fn space(&self, name: &str) -> Result<&Arc<ShiftSpace>> {
        self.spaces
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::input(format!("space {name} is not defined in the spec")))
    }

    /// All runs, or the one named by the filter.
    pub fn select_runs(&self, filter: Option<&str>) -> Result<Vec<&RunSpec>> {
        match filter {
            None => {
                if self.runs.is_empty() {
                    return Err(Error::input("spec file declares no runs"));
                }
                Ok(self.runs.iter().collect())
            }
            Some(name) => {
                let run = self
                    .runs
                    .iter()
                    .find(|r| r.name == name)
                    .ok_or_else(|| Error::input(format!("run {name} is not defined in the spec")))?;
                Ok(vec![run])
            }
        }
    }
}

const HEADER: &str = "shiftdrift-spec v1";

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse(format!("line {line}: {}", msg.into()))
}

fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "_.^()[]@+-".contains(c))
}

fn check_name(line: usize, s: &str) -> Result<()> {
    if is_name(s) {
        return Ok(());
    }
    Err(perr(line, format!("invalid name {s:?}")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| perr(line, format!("{key} expects a non-negative integer, got {v:?}")))
}

fn parse_i64(line: usize, key: &str, v: &str) -> Result<i64> {
    v.parse().map_err(|_| perr(line, format!("{key} expects an integer, got {v:?}")))
}

fn name_list(line: usize, v: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for part in v.split(',') {
        let p = part.trim();
        check_name(line, p)?;
        out.push(p.to_string());
    }
    Ok(out)
}

/// Splits a `pair`-style payload on the `~` separating the two literals.
fn split_tilde(line: usize, payload: &str) -> Result<(String, String)> {
    let (a, b) = payload
        .split_once('~')
        .ok_or_else(|| perr(line, "expected two literals separated by '~'"))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

/// Comment-stripped, non-blank lines with their 1-based numbers.
fn significant_lines(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                None
            } else {
                Some((i + 1, t.to_string()))
            }
        })
        .collect()
}

/// Collects the body of a stanza opened at `pos - 1`, consuming through the
/// matching close brace. Sub-blocks keep their braces.
fn take_body(lines: &[(usize, String)], pos: &mut usize, open_line: usize) -> Result<Vec<(usize, String)>> {
    let mut body = Vec::new();
    let mut depth = 1usize;
    while *pos < lines.len() {
        let (ln, text) = &lines[*pos];
        *pos += 1;
        if text.ends_with('{') {
            depth += 1;
        } else if text == "}" {
            depth -= 1;
            if depth == 0 {
                return Ok(body);
            }
        }
        body.push((*ln, text.clone()));
    }
    Err(perr(open_line, "stanza is not closed"))
}

/// Extracts an inner `tag {` ... `}` block from a stanza body.
fn take_sub_block(
    body: &[(usize, String)],
    pos: &mut usize,
    open_line: usize,
) -> Result<Vec<(usize, String)>> {
    let mut sub = Vec::new();
    while *pos < body.len() {
        let (ln, text) = &body[*pos];
        *pos += 1;
        if text == "}" {
            return Ok(sub);
        }
        if text.ends_with('{') {
            return Err(perr(*ln, "blocks nest at most one level"));
        }
        sub.push((*ln, text.clone()));
    }
    Err(perr(open_line, "block is not closed"))
}

struct Builder {
    spec: SpecFile,
    space_idx: BTreeMap<String, usize>,
    auto_idx: BTreeMap<String, usize>,
    family_idx: BTreeMap<String, usize>,
    cylinder_idx: BTreeMap<String, usize>,
    run_names: BTreeSet<String>,
}

impl Builder {
    fn space(&self, line: usize, name: &str) -> Result<&Arc<ShiftSpace>> {
        self.space_idx
            .get(name)
            .map(|&i| &self.spec.spaces[i].1)
            .ok_or_else(|| perr(line, format!("space {name} is not defined (yet)")))
    }

    fn auto(&self, line: usize, name: &str) -> Result<&Automorphism> {
        self.auto_idx
            .get(name)
            .map(|&i| &self.spec.autos[i].1)
            .ok_or_else(|| perr(line, format!("automorphism {name} is not defined (yet)")))
    }

    fn family(&self, line: usize, name: &str) -> Result<&CAFamily> {
        self.family_idx
            .get(name)
            .map(|&i| &self.spec.families[i].1)
            .ok_or_else(|| perr(line, format!("family {name} is not defined (yet)")))
    }

    fn cylinder(&self, line: usize, name: &str) -> Result<&Cylinder> {
        self.cylinder_idx
            .get(name)
            .map(|&i| &self.spec.cylinders[i].1)
            .ok_or_else(|| perr(line, format!("cylinder {name} is not defined (yet)")))
    }
}

/// Parses and resolves a spec document. Errors carry 1-based line numbers;
/// all failures here are input errors, including objects whose construction
/// fails (an uncalibrated `pair`, a non-bijective jump rule).
pub fn parse_spec(text: &str) -> Result<SpecFile> {
    let lines = significant_lines(text);
    if lines.is_empty() || lines[0].1 != HEADER {
        let ln = lines.first().map(|(l, _)| *l).unwrap_or(1);
        return Err(perr(ln, format!("expected header {HEADER:?}")));
    }

    let mut b = Builder {
        spec: SpecFile::default(),
        space_idx: BTreeMap::new(),
        auto_idx: BTreeMap::new(),
        family_idx: BTreeMap::new(),
        cylinder_idx: BTreeMap::new(),
        run_names: BTreeSet::new(),
    };

    let mut pos = 1;
    while pos < lines.len() {
        let (ln, text) = &lines[pos];
        pos += 1;
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != 3 || parts[2] != "{" {
            return Err(perr(*ln, format!("expected a stanza header, got {text:?}")));
        }
        let (kind, name) = (parts[0], parts[1]);
        check_name(*ln, name)?;
        let body = take_body(&lines, &mut pos, *ln)?;
        match kind {
            "space" => {
                if b.space_idx.contains_key(name) {
                    return Err(perr(*ln, format!("duplicate space {name}")));
                }
                let space = parse_space(&b, *ln, name, &body)?;
                b.space_idx.insert(name.to_string(), b.spec.spaces.len());
                b.spec.spaces.push((name.to_string(), space));
            }
            "auto" => {
                if b.auto_idx.contains_key(name) {
                    return Err(perr(*ln, format!("duplicate automorphism {name}")));
                }
                let auto = parse_auto(&b, *ln, name, &body)?;
                b.auto_idx.insert(name.to_string(), b.spec.autos.len());
                b.spec.autos.push((name.to_string(), auto));
            }
            "family" => {
                if b.family_idx.contains_key(name) {
                    return Err(perr(*ln, format!("duplicate family {name}")));
                }
                let family = parse_family(&b, *ln, name, &body)?;
                b.family_idx.insert(name.to_string(), b.spec.families.len());
                b.spec.families.push((name.to_string(), family));
            }
            "cylinder" => {
                if b.cylinder_idx.contains_key(name) {
                    return Err(perr(*ln, format!("duplicate cylinder {name}")));
                }
                let cyl = parse_cylinder(&b, *ln, name, &body)?;
                b.cylinder_idx.insert(name.to_string(), b.spec.cylinders.len());
                b.spec.cylinders.push((name.to_string(), cyl));
            }
            "run" => {
                if !b.run_names.insert(name.to_string()) {
                    return Err(perr(*ln, format!("duplicate run {name}")));
                }
                let run = parse_run(&b, *ln, name, &body)?;
                b.spec.runs.push(run);
            }
            other => return Err(perr(*ln, format!("unknown stanza kind {other:?}"))),
        }
    }
    Ok(b.spec)
}

fn wrap(line: usize, r: impl FnOnce() -> Result<Arc<ShiftSpace>>) -> Result<Arc<ShiftSpace>> {
    r().map_err(|e| perr(line, e.to_string()))
}

fn parse_space(
    b: &Builder,
    stanza_line: usize,
    name: &str,
    body: &[(usize, String)],
) -> Result<Arc<ShiftSpace>> {
    let mut alphabet: Option<(usize, Arc<Alphabet>)> = None;
    let mut built: Option<Arc<ShiftSpace>> = None;
    let mut pos = 0;
    while pos < body.len() {
        let (ln, text) = &body[pos];
        let ln = *ln;
        pos += 1;
        if built.is_some() && !text.is_empty() {
            return Err(perr(ln, "space stanza already has a presentation"));
        }
        if let Some(v) = text.strip_prefix("alphabet") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            if alphabet.is_some() {
                return Err(perr(ln, "duplicate alphabet line"));
            }
            let names: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
            let a = Alphabet::new(names).map_err(|e| perr(ln, e.to_string()))?;
            alphabet = Some((ln, Arc::new(a)));
        } else if text == "orbit {" {
            let sub = take_sub_block(body, &mut pos, ln)?;
            let (_, a) = alphabet
                .as_ref()
                .ok_or_else(|| perr(ln, "orbit presentation needs an alphabet line first"))?;
            let mut gens = Vec::new();
            for (gl, gt) in &sub {
                let lit = gt
                    .strip_prefix("generator")
                    .ok_or_else(|| perr(*gl, "expected a generator line"))?
                    .trim();
                gens.push(parse_point(a, lit).map_err(|e| perr(*gl, e.to_string()))?);
            }
            let a = Arc::clone(a);
            built = Some(wrap(ln, || ShiftSpace::orbit_closure(name, a, gens))?);
        } else if text == "sofic {" {
            let sub = take_sub_block(body, &mut pos, ln)?;
            let (_, a) = alphabet
                .as_ref()
                .ok_or_else(|| perr(ln, "sofic presentation needs an alphabet line first"))?;
            let mut states: Option<Vec<String>> = None;
            let mut edges = Vec::new();
            for (sl, st) in &sub {
                if let Some(v) = st.strip_prefix("states") {
                    let v = v.trim().strip_prefix('=').ok_or_else(|| perr(*sl, "expected '='"))?;
                    if states.is_some() {
                        return Err(perr(*sl, "duplicate states line"));
                    }
                    states = Some(name_list(*sl, v)?);
                } else if let Some(v) = st.strip_prefix("edge") {
                    let toks: Vec<&str> = v.split_whitespace().collect();
                    if toks.len() != 3 {
                        return Err(perr(*sl, "edge lines read: edge <from> <symbol> <to>"));
                    }
                    let st_names = states
                        .as_ref()
                        .ok_or_else(|| perr(*sl, "states must be declared before edges"))?;
                    let find = |s: &str| {
                        st_names
                            .iter()
                            .position(|n| n == s)
                            .ok_or_else(|| perr(*sl, format!("unknown state {s}")))
                    };
                    let sym = a.symbol(toks[1]).map_err(|e| perr(*sl, e.to_string()))?;
                    edges.push((find(toks[0])?, sym, find(toks[2])?));
                } else {
                    return Err(perr(*sl, format!("unexpected sofic line {st:?}")));
                }
            }
            let states = states.ok_or_else(|| perr(ln, "sofic presentation needs states"))?;
            let automaton =
                SoficAutomaton::new(states, edges).map_err(|e| perr(ln, e.to_string()))?;
            let a = Arc::clone(a);
            built = Some(wrap(ln, || ShiftSpace::sofic(name, a, automaton))?);
        } else if let Some(v) = text.strip_prefix("product") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            if let Some((al, _)) = alphabet {
                return Err(perr(al, "product spaces derive their alphabet; drop this line"));
            }
            let (l, r) = v
                .split_once('*')
                .ok_or_else(|| perr(ln, "product reads: product = <left> * <right>"))?;
            let left = Arc::clone(b.space(ln, l.trim())?);
            let right = Arc::clone(b.space(ln, r.trim())?);
            built = Some(ShiftSpace::product(name, left, right));
        } else {
            return Err(perr(ln, format!("unexpected space line {text:?}")));
        }
    }
    built.ok_or_else(|| perr(stanza_line, format!("space {name} has no presentation")))
}

fn parse_auto(
    b: &Builder,
    stanza_line: usize,
    stanza_name: &str,
    body: &[(usize, String)],
) -> Result<Automorphism> {
    let mut space: Option<Arc<ShiftSpace>> = None;
    let mut built: Option<Automorphism> = None;
    let mut pos = 0;
    let need_space = |space: &Option<Arc<ShiftSpace>>, ln: usize| {
        space.clone().ok_or_else(|| perr(ln, "declare `space = <name>` before the rule"))
    };
    while pos < body.len() {
        let (ln, text) = &body[pos];
        let ln = *ln;
        pos += 1;
        if built.is_some() {
            return Err(perr(ln, "automorphism stanza already has a rule"));
        }
        if let Some(v) = text.strip_prefix("space") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            if space.is_some() {
                return Err(perr(ln, "duplicate space line"));
            }
            space = Some(Arc::clone(b.space(ln, v.trim())?));
        } else if let Some(v) = text.strip_prefix("shift") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            let k = parse_i64(ln, "shift", v.trim())?;
            let sp = need_space(&space, ln)?;
            built = Some(Automorphism::shift_power(sp.alphabet().clone(), k));
        } else if text == "identity" {
            let sp = need_space(&space, ln)?;
            built = Some(Automorphism::identity(sp.alphabet().clone()));
        } else if text == "swap" {
            let sp = need_space(&space, ln)?;
            built = Some(
                Automorphism::swap(sp.alphabet().clone()).map_err(|e| perr(ln, e.to_string()))?,
            );
        } else if text == "permute {" {
            let sub = take_sub_block(body, &mut pos, ln)?;
            let sp = need_space(&space, ln)?;
            let a = sp.alphabet();
            let mut label = stanza_name.to_string();
            let mut perm: Vec<Option<SymbolId>> = vec![None; a.len()];
            for (sl, st) in &sub {
                if let Some(v) = st.strip_prefix("name") {
                    let v = v.trim().strip_prefix('=').ok_or_else(|| perr(*sl, "expected '='"))?;
                    label = v.trim().to_string();
                } else if let Some(v) = st.strip_prefix("map") {
                    let (from, to) = v
                        .split_once("->")
                        .ok_or_else(|| perr(*sl, "map lines read: map <from> -> <to>"))?;
                    let f = a.symbol(from.trim()).map_err(|e| perr(*sl, e.to_string()))?;
                    let t = a.symbol(to.trim()).map_err(|e| perr(*sl, e.to_string()))?;
                    if perm[f.0 as usize].is_some() {
                        return Err(perr(*sl, format!("duplicate map for {}", from.trim())));
                    }
                    perm[f.0 as usize] = Some(t);
                } else {
                    return Err(perr(*sl, format!("unexpected permute line {st:?}")));
                }
            }
            let perm: Vec<SymbolId> = perm
                .into_iter()
                .enumerate()
                .map(|(i, p)| p.ok_or_else(|| perr(ln, format!("symbol {} is unmapped", a.name(SymbolId(i as u16))))))
                .collect::<Result<_>>()?;
            let mut inv = vec![SymbolId(0); perm.len()];
            for (i, p) in perm.iter().enumerate() {
                inv[p.0 as usize] = SymbolId(i as u16);
            }
            let build = || -> Result<Automorphism> {
                Automorphism::new(
                    label,
                    BlockMap::permute(a.clone(), perm.clone())?,
                    BlockMap::permute(a.clone(), inv)?,
                )
            };
            built = Some(build().map_err(|e| perr(ln, e.to_string()))?);
        } else if text == "embed {" {
            let sub = take_sub_block(body, &mut pos, ln)?;
            let sp = need_space(&space, ln)?;
            let (base, _) = sp
                .components()
                .ok_or_else(|| perr(ln, "embed rules need a product space"))?;
            let base_alphabet = base.alphabet().clone();
            let mut rule_name: Option<String> = None;
            let mut radius: Option<usize> = None;
            let mut default: Option<i64> = None;
            let mut table = BTreeMap::new();
            for (sl, st) in &sub {
                if let Some(v) = st.strip_prefix("name") {
                    let v = v.trim().strip_prefix('=').ok_or_else(|| perr(*sl, "expected '='"))?;
                    rule_name = Some(v.trim().to_string());
                } else if let Some(v) = st.strip_prefix("radius") {
                    let v = v.trim().strip_prefix('=').ok_or_else(|| perr(*sl, "expected '='"))?;
                    radius = Some(parse_usize(*sl, "radius", v.trim())?);
                } else if let Some(v) = st.strip_prefix("default") {
                    let v = v.trim().strip_prefix('=').ok_or_else(|| perr(*sl, "expected '='"))?;
                    default = Some(parse_i64(*sl, "default", v.trim())?);
                } else if let Some(v) = st.strip_prefix("jump") {
                    let (w, n) = v
                        .split_once("->")
                        .ok_or_else(|| perr(*sl, "jump lines read: jump <word> -> <integer>"))?;
                    let word =
                        base_alphabet.parse_word(w.trim()).map_err(|e| perr(*sl, e.to_string()))?;
                    let n = parse_i64(*sl, "jump", n.trim())?;
                    if table.insert(word, n).is_some() {
                        return Err(perr(*sl, format!("duplicate jump for {}", w.trim())));
                    }
                } else {
                    return Err(perr(*sl, format!("unexpected embed line {st:?}")));
                }
            }
            let rule_name = rule_name.ok_or_else(|| perr(ln, "embed blocks need a name"))?;
            let radius = radius.ok_or_else(|| perr(ln, "embed blocks need a radius"))?;
            let rule = OrbitCocycle::new(rule_name, radius, table, default)
                .map_err(|e| perr(ln, e.to_string()))?;
            built = Some(embed_marker_rule(&sp, rule).map_err(|e| perr(ln, e.to_string()))?);
        } else if let Some(v) = text.strip_prefix("compose") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            let (l, r) = v
                .split_once(',')
                .ok_or_else(|| perr(ln, "compose reads: compose = <outer>, <inner>"))?;
            let outer = b.auto(ln, l.trim())?;
            let inner = b.auto(ln, r.trim())?;
            built = Some(outer.compose(inner).map_err(|e| perr(ln, e.to_string()))?);
        } else {
            return Err(perr(ln, format!("unexpected automorphism line {text:?}")));
        }
    }
    built.ok_or_else(|| perr(stanza_line, format!("automorphism {stanza_name} has no rule")))
}

fn parse_family(
    b: &Builder,
    stanza_line: usize,
    name: &str,
    body: &[(usize, String)],
) -> Result<CAFamily> {
    let mut space: Option<Arc<ShiftSpace>> = None;
    let mut schemas = Vec::new();
    for (ln, text) in body {
        let ln = *ln;
        if let Some(v) = text.strip_prefix("space") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            if space.is_some() {
                return Err(perr(ln, "duplicate space line"));
            }
            space = Some(Arc::clone(b.space(ln, v.trim())?));
        } else if let Some(payload) = text.strip_prefix("pair") {
            let sp = space
                .as_ref()
                .ok_or_else(|| perr(ln, "declare `space = <name>` before schemas"))?;
            let (xs, ys) = split_tilde(ln, payload)?;
            let x = parse_point(sp.alphabet(), &xs).map_err(|e| perr(ln, e.to_string()))?;
            let y = parse_point(sp.alphabet(), &ys).map_err(|e| perr(ln, e.to_string()))?;
            let p = CalibratedPair::new(x, y).map_err(|e| perr(ln, e.to_string()))?;
            schemas.push(PairSchema::Fixed(p));
        } else if text.starts_with("free-left") || text.starts_with("free-right") {
            let sp = space
                .as_ref()
                .ok_or_else(|| perr(ln, "declare `space = <name>` before schemas"))?;
            let (free_slot, payload) = if let Some(p) = text.strip_prefix("free-left") {
                (Slot::Left, p)
            } else {
                (Slot::Right, text.strip_prefix("free-right").unwrap())
            };
            let (left, right) = sp
                .components()
                .ok_or_else(|| perr(ln, "free schemas need a product space"))?;
            // Templates live in the slot that is not free.
            let template_space = match free_slot {
                Slot::Left => right,
                Slot::Right => left,
            };
            let (xs, ys) = split_tilde(ln, payload)?;
            let template_x =
                parse_point(template_space.alphabet(), &xs).map_err(|e| perr(ln, e.to_string()))?;
            let template_y =
                parse_point(template_space.alphabet(), &ys).map_err(|e| perr(ln, e.to_string()))?;
            schemas.push(PairSchema::SharedFree { free_slot, template_x, template_y });
        } else {
            return Err(perr(ln, format!("unexpected family line {text:?}")));
        }
    }
    let space = space.ok_or_else(|| perr(stanza_line, format!("family {name} names no space")))?;
    CAFamily::new(name, space, schemas).map_err(|e| perr(stanza_line, e.to_string()))
}

fn parse_cylinder(
    b: &Builder,
    stanza_line: usize,
    name: &str,
    body: &[(usize, String)],
) -> Result<Cylinder> {
    let mut family: Option<&CAFamily> = None;
    let mut space: Option<Arc<ShiftSpace>> = None;
    let mut schema: Option<usize> = None;
    let mut radius: Option<usize> = None;
    let mut pairs = BTreeSet::new();
    for (ln, text) in body {
        let ln = *ln;
        if let Some(v) = text.strip_prefix("family") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            family = Some(b.family(ln, v.trim())?);
        } else if let Some(v) = text.strip_prefix("space") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            space = Some(Arc::clone(b.space(ln, v.trim())?));
        } else if let Some(v) = text.strip_prefix("schema") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            schema = Some(parse_usize(ln, "schema", v.trim())?);
        } else if let Some(v) = text.strip_prefix("radius") {
            let v = v.trim().strip_prefix('=').ok_or_else(|| perr(ln, "expected '='"))?;
            radius = Some(parse_usize(ln, "radius", v.trim())?);
        } else if let Some(payload) = text.strip_prefix("pair") {
            let sp = space
                .as_ref()
                .ok_or_else(|| perr(ln, "declare `space = <name>` before word pairs"))?;
            let (xs, ys) = split_tilde(ln, payload)?;
            let x = sp.alphabet().parse_word(&xs).map_err(|e| perr(ln, e.to_string()))?;
            let y = sp.alphabet().parse_word(&ys).map_err(|e| perr(ln, e.to_string()))?;
            pairs.insert(WordPair::new(x, y).map_err(|e| perr(ln, e.to_string()))?);
        } else {
            return Err(perr(ln, format!("unexpected cylinder line {text:?}")));
        }
    }
    let radius = radius.ok_or_else(|| perr(stanza_line, "cylinder stanzas need a radius"))?;
    match (family, schema) {
        (Some(f), Some(i)) => {
            if !pairs.is_empty() || space.is_some() {
                return Err(perr(stanza_line, "schema cylinders take only family, schema, radius"));
            }
            Cylinder::schema_window(f, i, radius).map_err(|e| perr(stanza_line, e.to_string()))
        }
        (None, None) => {
            Cylinder::new(name, radius, pairs).map_err(|e| perr(stanza_line, e.to_string()))
        }
        _ => Err(perr(stanza_line, "cylinder stanzas pair `family` with `schema`")),
    }
}

fn parse_run(
    b: &Builder,
    stanza_line: usize,
    name: &str,
    body: &[(usize, String)],
) -> Result<RunSpec> {
    let mut family: Option<CAFamily> = None;
    let mut autos = Vec::new();
    let mut cylinders = Vec::new();
    let mut config = PipelineConfig::default();
    let mut pairs = Vec::new();
    for (ln, text) in body {
        let ln = *ln;
        if let Some(payload) = text.strip_prefix("pair") {
            let f = family
                .as_ref()
                .ok_or_else(|| perr(ln, "declare `family = <name>` before pairs"))?;
            let a = f.space().alphabet();
            let (xs, ys) = split_tilde(ln, payload)?;
            let x = parse_point(a, &xs).map_err(|e| perr(ln, e.to_string()))?;
            let y = parse_point(a, &ys).map_err(|e| perr(ln, e.to_string()))?;
            let pair = shiftdrift_core::make_pair(x, y).map_err(|e| perr(ln, e.to_string()))?;
            pairs.push(shiftdrift_core::calibrate(&pair));
            continue;
        }
        let (key, v) = text
            .split_once('=')
            .ok_or_else(|| perr(ln, format!("expected `key = value`, got {text:?}")))?;
        let (key, v) = (key.trim(), v.trim());
        match key {
            "family" => family = Some(b.family(ln, v)?.clone()),
            "autos" => {
                for n in name_list(ln, v)? {
                    autos.push(b.auto(ln, &n)?.clone());
                }
            }
            "cylinders" => {
                for n in name_list(ln, v)? {
                    cylinders.push(b.cylinder(ln, &n)?.clone());
                }
            }
            "stages" => {
                config.stages = parse_usize(ln, key, v)?;
                if config.stages == 0 {
                    return Err(perr(ln, "stages must be at least 1"));
                }
            }
            "n-max" => config.n_max = parse_usize(ln, key, v)?,
            "extension-step" => {
                config.extension_step = parse_usize(ln, key, v)?;
                if config.extension_step == 0 {
                    return Err(perr(ln, "extension-step must be at least 1"));
                }
            }
            "entropy-threshold" => {
                let t: f64 = v
                    .parse()
                    .map_err(|_| perr(ln, format!("entropy-threshold expects a number, got {v:?}")))?;
                if !t.is_finite() || t <= 0.0 {
                    return Err(perr(ln, "entropy-threshold must be positive and finite"));
                }
                config.entropy_threshold = t;
            }
            "entropy-check-len" => config.entropy_check_len = parse_usize(ln, key, v)?,
            "infinite-check-len" => config.infinite_check_len = parse_usize(ln, key, v)?,
            "verify-len" => config.verify_len = parse_usize(ln, key, v)?,
            "completeness-radius" => {
                config.completeness_radius =
                    if v == "none" { None } else { Some(parse_usize(ln, key, v)?) };
            }
            other => return Err(perr(ln, format!("unknown run setting {other:?}"))),
        }
    }
    let family =
        family.ok_or_else(|| perr(stanza_line, format!("run {name} names no family")))?;
    Ok(RunSpec { name: name.to_string(), family, autos, cylinders, config, pairs })
}

// ---------------------------------------------------------------------------
// Export

fn expressible_name(s: &str) -> Result<&str> {
    if is_name(s) {
        Ok(s)
    } else {
        Err(Error::input(format!("name {s:?} is not expressible in spec syntax")))
    }
}

fn atomic_names(a: &Alphabet) -> Result<String> {
    if a.components().is_some() {
        return Err(Error::input("only atomic alphabets are written as alphabet lines"));
    }
    let names: Vec<&str> = a.ids().map(|s| a.name(s)).collect();
    Ok(names.join(", "))
}

fn space_stanza(space: &Arc<ShiftSpace>) -> Result<String> {
    let name = expressible_name(space.name())?;
    let mut out = format!("space {name} {{\n");
    match space.presentation() {
        Presentation::Orbit(gens) => {
            out.push_str(&format!("  alphabet = {}\n", atomic_names(space.alphabet())?));
            out.push_str("  orbit {\n");
            for g in gens {
                out.push_str(&format!("    generator {g}\n"));
            }
            out.push_str("  }\n");
        }
        Presentation::Sofic(aut) => {
            out.push_str(&format!("  alphabet = {}\n", atomic_names(space.alphabet())?));
            out.push_str("  sofic {\n");
            for s in aut.state_names() {
                expressible_name(s)?;
            }
            out.push_str(&format!("    states = {}\n", aut.state_names().join(", ")));
            for (f, s, t) in aut.edges() {
                out.push_str(&format!(
                    "    edge {} {} {}\n",
                    aut.state_names()[*f],
                    space.alphabet().name(*s),
                    aut.state_names()[*t],
                ));
            }
            out.push_str("  }\n");
        }
        Presentation::Product(l, r) => {
            out.push_str(&format!(
                "  product = {} * {}\n",
                expressible_name(l.name())?,
                expressible_name(r.name())?
            ));
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Emits `space` and, first, any product components not yet emitted.
/// Distinct spaces may not share a name.
fn collect_spaces(
    space: &Arc<ShiftSpace>,
    seen: &mut BTreeMap<String, Arc<ShiftSpace>>,
    order: &mut Vec<Arc<ShiftSpace>>,
) -> Result<()> {
    if let Presentation::Product(l, r) = space.presentation() {
        collect_spaces(l, seen, order)?;
        collect_spaces(r, seen, order)?;
    }
    match seen.get(space.name()) {
        Some(prev) if **prev == **space => Ok(()),
        Some(_) => Err(Error::input(format!(
            "two distinct spaces share the name {}",
            space.name()
        ))),
        None => {
            seen.insert(space.name().to_string(), Arc::clone(space));
            order.push(Arc::clone(space));
            Ok(())
        }
    }
}

fn auto_stanza(ref_name: &str, space: &Arc<ShiftSpace>, auto: &Automorphism) -> Result<String> {
    let a = space.alphabet();
    if auto.alphabet() != a {
        return Err(Error::input(format!(
            "automorphism {} does not act on space {}",
            auto.label(),
            space.name()
        )));
    }
    let not_expressible = || {
        Error::input(format!(
            "automorphism {} is not expressible in spec syntax",
            auto.label()
        ))
    };
    let body = match auto.forward().rule_view() {
        RuleView::Project { offset } => {
            let k = -offset;
            if Automorphism::shift_power(a.clone(), k) != *auto {
                return Err(not_expressible());
            }
            format!("  shift = {k}\n")
        }
        RuleView::Permute(p) => {
            if a.components().is_some() && Automorphism::swap(a.clone())? == *auto {
                "  swap\n".to_string()
            } else {
                let mut inv = vec![SymbolId(0); p.len()];
                for (i, im) in p.iter().enumerate() {
                    inv[im.0 as usize] = SymbolId(i as u16);
                }
                let rebuilt = Automorphism::new(
                    auto.label(),
                    BlockMap::permute(a.clone(), p.to_vec())?,
                    BlockMap::permute(a.clone(), inv)?,
                )?;
                if rebuilt != *auto {
                    return Err(not_expressible());
                }
                let mut body = format!("  permute {{\n    name = {}\n", expressible_name(auto.label())?);
                for (i, im) in p.iter().enumerate() {
                    body.push_str(&format!(
                        "    map {} -> {}\n",
                        a.name(SymbolId(i as u16)),
                        a.name(*im)
                    ));
                }
                body.push_str("  }\n");
                body
            }
        }
        RuleView::MarkerMove(rule) => {
            if embed_marker_rule(space, rule.clone())? != *auto {
                return Err(not_expressible());
            }
            let mut body = format!(
                "  embed {{\n    name = {}\n    radius = {}\n",
                expressible_name(rule.name())?,
                rule.radius()
            );
            if let Some(d) = rule.default_value() {
                body.push_str(&format!("    default = {d}\n"));
            }
            let base = space.components().expect("marker rules live on products").0;
            for (w, n) in rule.entries() {
                body.push_str(&format!("    jump {} -> {n}\n", base.alphabet().render_word(w)));
            }
            body.push_str("  }\n");
            body
        }
        RuleView::Table { .. } | RuleView::Compose(..) => return Err(not_expressible()),
    };
    Ok(format!(
        "auto {} {{\n  space = {}\n{body}}}\n",
        expressible_name(ref_name)?,
        expressible_name(space.name())?
    ))
}

fn family_stanza(family: &CAFamily) -> Result<String> {
    let mut out = format!(
        "family {} {{\n  space = {}\n",
        expressible_name(family.name())?,
        expressible_name(family.space().name())?
    );
    for schema in family.schemas() {
        match schema {
            PairSchema::Fixed(p) => {
                out.push_str(&format!("  pair {} ~ {}\n", p.x(), p.y()));
            }
            PairSchema::SharedFree { free_slot, template_x, template_y } => {
                let key = match free_slot {
                    Slot::Left => "free-left",
                    Slot::Right => "free-right",
                };
                out.push_str(&format!("  {key} {template_x} ~ {template_y}\n"));
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

fn cylinder_stanza(
    ref_name: &str,
    family_ref: &str,
    family: &CAFamily,
    space_ref: &str,
    cyl: &Cylinder,
) -> Result<String> {
    for idx in 0..family.schemas().len() {
        if Cylinder::schema_window(family, idx, cyl.radius())? == *cyl {
            return Ok(format!(
                "cylinder {} {{\n  family = {family_ref}\n  schema = {idx}\n  radius = {}\n}}\n",
                expressible_name(ref_name)?,
                cyl.radius()
            ));
        }
    }
    expressible_name(cyl.label())?;
    if cyl.label() != ref_name {
        return Err(Error::input(format!(
            "cylinder label {} cannot round-trip under reference name {ref_name}",
            cyl.label()
        )));
    }
    let a = family.space().alphabet();
    let mut out = format!(
        "cylinder {} {{\n  space = {space_ref}\n  radius = {}\n",
        expressible_name(ref_name)?,
        cyl.radius()
    );
    for p in cyl.word_pairs() {
        out.push_str(&format!("  pair {} ~ {}\n", a.render_word(p.x()), a.render_word(p.y())));
    }
    out.push_str("}\n");
    Ok(out)
}

fn run_stanza(entry: &GalleryEntry, auto_refs: &[String], cyl_refs: &[String]) -> Result<String> {
    let c = &entry.config;
    let mut out = format!(
        "run {} {{\n  family = {}\n",
        expressible_name(&entry.name)?,
        expressible_name(entry.family.name())?
    );
    if !auto_refs.is_empty() {
        out.push_str(&format!("  autos = {}\n", auto_refs.join(", ")));
    }
    if !cyl_refs.is_empty() {
        out.push_str(&format!("  cylinders = {}\n", cyl_refs.join(", ")));
    }
    out.push_str(&format!("  stages = {}\n", c.stages));
    out.push_str(&format!("  n-max = {}\n", c.n_max));
    out.push_str(&format!("  extension-step = {}\n", c.extension_step));
    out.push_str(&format!("  entropy-threshold = {}\n", c.entropy_threshold));
    out.push_str(&format!("  entropy-check-len = {}\n", c.entropy_check_len));
    out.push_str(&format!("  infinite-check-len = {}\n", c.infinite_check_len));
    out.push_str(&format!("  verify-len = {}\n", c.verify_len));
    match c.completeness_radius {
        Some(r) => out.push_str(&format!("  completeness-radius = {r}\n")),
        None => out.push_str("  completeness-radius = none\n"),
    }
    out.push_str("}\n");
    Ok(out)
}

/// Renders gallery entries as a spec document. Stanzas are grouped by kind
/// (spaces, families, automorphisms, cylinders, runs) in entry order, with
/// product components before their products; shared spaces are written once.
/// Automorphism reference names are `<entry>.<label>`, cylinders
/// `<entry>.cyl<i>`, runs `<entry>`.
pub fn export_entries(entries: &[GalleryEntry]) -> Result<String> {
    let mut seen_spaces = BTreeMap::new();
    let mut space_order = Vec::new();
    let mut names = BTreeSet::new();
    for e in entries {
        if !names.insert(e.name.clone()) {
            return Err(Error::input(format!("duplicate gallery entry name {}", e.name)));
        }
        collect_spaces(e.space(), &mut seen_spaces, &mut space_order)?;
    }

    let mut family_names = BTreeSet::new();
    let mut out = String::from(HEADER);
    out.push('\n');
    for s in &space_order {
        out.push('\n');
        out.push_str(&space_stanza(s)?);
    }
    for e in entries {
        if !family_names.insert(e.family.name().to_string()) {
            return Err(Error::input(format!("duplicate family name {}", e.family.name())));
        }
        out.push('\n');
        out.push_str(&family_stanza(&e.family)?);
    }
    for e in entries {
        for auto in &e.autos {
            out.push('\n');
            out.push_str(&auto_stanza(&format!("{}.{}", e.name, auto.label()), e.space(), auto)?);
        }
    }
    for e in entries {
        for (i, cyl) in e.cylinders.iter().enumerate() {
            out.push('\n');
            out.push_str(&cylinder_stanza(
                &format!("{}.cyl{i}", e.name),
                e.family.name(),
                &e.family,
                e.space().name(),
                cyl,
            )?);
        }
    }
    for e in entries {
        let auto_refs: Vec<String> =
            e.autos.iter().map(|a| format!("{}.{}", e.name, a.label())).collect();
        let cyl_refs: Vec<String> =
            (0..e.cylinders.len()).map(|i| format!("{}.cyl{i}", e.name)).collect();
        out.push('\n');
        out.push_str(&run_stanza(e, &auto_refs, &cyl_refs)?);
    }
    Ok(out)
}

/// The gallery entries whose drift runs succeed end to end. The full shift
/// is a refusal control and is exported only when named explicitly.
pub fn zero_entropy_entries() -> Result<Vec<GalleryEntry>> {
    ["sunny-side-up", "sunny-product", "alternating-product"]
        .iter()
        .map(|n| builtin(n))
        .collect()
}
