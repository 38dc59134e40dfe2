//! C/C++ function boundary extraction.
//!
//! A byte-level lexer strips comments, string and character literals, and
//! preprocessor lines; a shallow parser then looks for an identifier followed
//! by a parameter list followed by `{` at file scope and matches braces to
//! find the end of the body. Only the first branch of each `#if` chain is
//! kept (the `#else` branch for `#if 0`), so conditional code cannot
//! unbalance braces.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::repo::{CommitRef, RepoHandle};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionSnapshot {
    pub project: String,
    pub commit: String,
    pub path: String,
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub body: String,
    pub norm_hash: String,
}

impl FunctionSnapshot {
    pub fn contains(&self, line_no: usize) -> bool {
        self.start_line <= line_no && line_no <= self.end_line
    }

    pub fn line_count(&self) -> usize {
        self.end_line - self.start_line + 1
    }

    /// Body line at an absolute file line number.
    pub fn line(&self, line_no: usize) -> Option<&str> {
        if !self.contains(line_no) {
            return None;
        }
        self.body
            .split('\n')
            .nth(line_no - self.start_line)
            .map(|l| l.trim_end_matches('\r'))
    }

    pub fn located(mut self, project: &str, commit: &str, path: &str) -> Self {
        self.project = project.to_string();
        self.commit = commit.to_string();
        self.path = path.to_string();
        self
    }
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n')
}

/// Collapse every run of spaces, tabs, CRs and LFs to one space and trim.
pub fn normalize_bytes(body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len());
    let mut pending_space = false;
    for &b in body {
        if is_ws(b) {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(b' ');
                pending_space = false;
            }
            out.push(b);
        }
    }
    out
}

pub fn normalize_body(body: &str) -> String {
    // Only ASCII bytes are touched, so the result stays valid UTF-8.
    String::from_utf8(normalize_bytes(body.as_bytes())).expect("ascii-only rewrite")
}

/// SHA-256 (hex) of the whitespace-normalized raw bytes.
pub fn norm_hash(body: &[u8]) -> String {
    hex::encode(Sha256::digest(normalize_bytes(body)))
}

/// Which differences count as cosmetic when comparing two lines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CosmeticMode {
    #[default]
    Whitespace,
    WhitespaceAndComments,
}

pub fn is_cosmetic_change(before: &str, after: &str) -> bool {
    normalize_body(before) == normalize_body(after)
}

pub fn is_cosmetic_change_with(before: &str, after: &str, mode: CosmeticMode) -> bool {
    match mode {
        CosmeticMode::Whitespace => is_cosmetic_change(before, after),
        CosmeticMode::WhitespaceAndComments => {
            is_cosmetic_change(&strip_comments(before), &strip_comments(after))
        }
    }
}

/// Remove `//` and `/* */` comments, leaving string and char literals intact.
pub fn strip_comments(text: &str) -> String {
    let src = text.as_bytes();
    let mut out = Vec::with_capacity(src.len());
    let mut i = 0;
    while i < src.len() {
        match src[i] {
            b'/' if src.get(i + 1) == Some(&b'/') => {
                while i < src.len() && src[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if src.get(i + 1) == Some(&b'*') => {
                i += 2;
                while i < src.len() && !(src[i] == b'*' && src.get(i + 1) == Some(&b'/')) {
                    if src[i] == b'\n' {
                        out.push(b'\n');
                    }
                    i += 1;
                }
                i = (i + 2).min(src.len());
                out.push(b' ');
            }
            q @ (b'"' | b'\'') => {
                let end = quoted_end(src, i, q);
                out.extend_from_slice(&src[i..end]);
                i = end;
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// End (exclusive) of a quoted literal starting at `start`; stops at an
/// unescaped newline when the literal is unterminated.
fn quoted_end(src: &[u8], start: usize, quote: u8) -> usize {
    let mut i = start + 1;
    while i < src.len() {
        match src[i] {
            b'\\' => i += 2,
            b'\n' => return i,
            b if b == quote => return i + 1,
            _ => i += 1,
        }
    }
    src.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    If { zero: bool },
    Elif,
    Else,
    Endif,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Ident,
    Number,
    Str,
    Punct,
    Directive(Dir),
}

#[derive(Debug, Clone, Copy)]
struct Tok {
    kind: Kind,
    line: usize,
    start: usize,
    end: usize,
}

fn ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b >= 0x80
}

struct Lexer<'a> {
    src: &'a [u8],
    i: usize,
    line: usize,
    toks: Vec<Tok>,
}

impl<'a> Lexer<'a> {
    fn peek(&self, k: usize) -> Option<u8> {
        self.src.get(self.i + k).copied()
    }

    fn continuation(&self) -> Option<usize> {
        match (self.peek(0), self.peek(1), self.peek(2)) {
            (Some(b'\\'), Some(b'\n'), _) => Some(2),
            (Some(b'\\'), Some(b'\r'), Some(b'\n')) => Some(3),
            _ => None,
        }
    }

    fn skip_line_comment(&mut self) {
        while self.i < self.src.len() && self.src[self.i] != b'\n' {
            if let Some(n) = self.continuation() {
                self.i += n;
                self.line += 1;
            } else {
                self.i += 1;
            }
        }
    }

    fn skip_block_comment(&mut self) {
        self.i += 2;
        while self.i < self.src.len() {
            if self.src[self.i] == b'*' && self.peek(1) == Some(b'/') {
                self.i += 2;
                return;
            }
            if self.src[self.i] == b'\n' {
                self.line += 1;
            }
            self.i += 1;
        }
    }

    fn push(&mut self, kind: Kind, line: usize, start: usize) {
        self.toks.push(Tok {
            kind,
            line,
            start,
            end: self.i,
        });
    }

    fn quoted(&mut self, quote: u8) {
        let end = quoted_end(self.src, self.i, quote).min(self.src.len());
        // escaped newlines inside the literal
        self.line += self.src[self.i..end]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        self.i = end;
    }

    fn raw_string(&mut self) {
        // at the opening quote of R"delim( ... )delim"
        let open = self.i + 1;
        let Some(paren) = self.src[open..]
            .iter()
            .take(17)
            .position(|&b| b == b'(')
            .map(|p| open + p)
        else {
            self.quoted(b'"');
            return;
        };
        let mut close = Vec::with_capacity(paren - open + 2);
        close.push(b')');
        close.extend_from_slice(&self.src[open..paren]);
        close.push(b'"');
        let body = &self.src[paren + 1..];
        let end = body
            .windows(close.len())
            .position(|w| w == close.as_slice())
            .map(|p| paren + 1 + p + close.len())
            .unwrap_or(self.src.len());
        self.line += self.src[self.i..end]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        self.i = end;
    }

    fn directive(&mut self) {
        let line = self.line;
        let start = self.i;
        self.i += 1;
        while matches!(self.peek(0), Some(b' ' | b'\t')) {
            self.i += 1;
        }
        let name_start = self.i;
        while self.peek(0).is_some_and(ident_byte) {
            self.i += 1;
        }
        let name = &self.src[name_start..self.i];
        let mut rest = Vec::new();
        while self.i < self.src.len() && self.src[self.i] != b'\n' {
            if let Some(n) = self.continuation() {
                self.i += n;
                self.line += 1;
                rest.push(b' ');
            } else if self.src[self.i] == b'/' && self.peek(1) == Some(b'/') {
                self.skip_line_comment();
            } else if self.src[self.i] == b'/' && self.peek(1) == Some(b'*') {
                self.skip_block_comment();
                rest.push(b' ');
            } else {
                rest.push(self.src[self.i]);
                self.i += 1;
            }
        }
        let dir = match name {
            b"if" => Dir::If {
                zero: normalize_bytes(&rest) == b"0",
            },
            b"ifdef" | b"ifndef" => Dir::If { zero: false },
            b"elif" | b"elifdef" | b"elifndef" => Dir::Elif,
            b"else" => Dir::Else,
            b"endif" => Dir::Endif,
            _ => Dir::Other,
        };
        self.push(Kind::Directive(dir), line, start);
    }

    fn run(mut self) -> Vec<Tok> {
        let mut line_start = true;
        while self.i < self.src.len() {
            let c = self.src[self.i];
            let start = self.i;
            let line = self.line;
            match c {
                b'\n' => {
                    self.line += 1;
                    self.i += 1;
                    line_start = true;
                    continue;
                }
                b' ' | b'\t' | b'\r' | 0x0b | 0x0c => {
                    self.i += 1;
                    continue;
                }
                b'\\' if self.continuation().is_some() => {
                    self.i += self.continuation().unwrap_or(1);
                    self.line += 1;
                    continue;
                }
                b'/' if self.peek(1) == Some(b'/') => {
                    self.skip_line_comment();
                    continue;
                }
                b'/' if self.peek(1) == Some(b'*') => {
                    self.skip_block_comment();
                    continue;
                }
                b'#' if line_start => {
                    self.directive();
                    continue;
                }
                b'"' => {
                    self.quoted(b'"');
                    self.push(Kind::Str, line, start);
                }
                b'\'' => {
                    self.quoted(b'\'');
                    self.push(Kind::Str, line, start);
                }
                b'0'..=b'9' => {
                    self.number();
                    self.push(Kind::Number, line, start);
                }
                b'.' if self.peek(1).is_some_and(|b| b.is_ascii_digit()) => {
                    self.number();
                    self.push(Kind::Number, line, start);
                }
                b if ident_byte(b) => {
                    while self.peek(0).is_some_and(ident_byte) {
                        self.i += 1;
                    }
                    let word = &self.src[start..self.i];
                    match self.peek(0) {
                        Some(b'"') if matches!(word, b"R" | b"LR" | b"uR" | b"UR" | b"u8R") => {
                            self.raw_string();
                            self.push(Kind::Str, line, start);
                        }
                        Some(q @ (b'"' | b'\'')) if matches!(word, b"L" | b"u" | b"U" | b"u8") => {
                            self.quoted(q);
                            self.push(Kind::Str, line, start);
                        }
                        _ => self.push(Kind::Ident, line, start),
                    }
                }
                _ => {
                    let two = (c, self.peek(1).unwrap_or(0));
                    self.i += if matches!(two, (b':', b':') | (b'-', b'>')) {
                        2
                    } else {
                        1
                    };
                    self.push(Kind::Punct, line, start);
                }
            }
            line_start = false;
        }
        self.toks
    }

    fn number(&mut self) {
        while let Some(b) = self.peek(0) {
            let exp_sign = matches!(b, b'+' | b'-')
                && matches!(self.src[self.i - 1], b'e' | b'E' | b'p' | b'P');
            let digit_sep = b == b'\'' && self.peek(1).is_some_and(|n| n.is_ascii_alphanumeric());
            if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || exp_sign || digit_sep {
                self.i += 1;
            } else {
                break;
            }
        }
    }
}

/// Tokens of the active preprocessor branch.
fn active_tokens(toks: Vec<Tok>) -> Vec<Tok> {
    struct Frame {
        parent_active: bool,
        taking: bool,
        taken: bool,
    }
    let mut stack: Vec<Frame> = Vec::new();
    let mut active = true;
    let mut out = Vec::with_capacity(toks.len());
    for t in toks {
        match t.kind {
            Kind::Directive(Dir::If { zero }) => {
                stack.push(Frame {
                    parent_active: active,
                    taking: !zero,
                    taken: !zero,
                });
                active = active && !zero;
            }
            Kind::Directive(Dir::Elif | Dir::Else) => {
                if let Some(f) = stack.last_mut() {
                    f.taking = !f.taken;
                    f.taken = true;
                    active = f.parent_active && f.taking;
                }
            }
            Kind::Directive(Dir::Endif) => {
                if let Some(f) = stack.pop() {
                    active = f.parent_active;
                }
            }
            _ => {}
        }
        if active {
            out.push(t);
        }
    }
    out
}

const NOT_A_NAME: &[&str] = &[
    "if",
    "else",
    "while",
    "for",
    "do",
    "switch",
    "case",
    "return",
    "sizeof",
    "alignof",
    "_Alignof",
    "typeof",
    "__typeof__",
    "__typeof",
    "decltype",
    "__attribute__",
    "__attribute",
    "__declspec",
    "alignas",
    "_Alignas",
    "noexcept",
    "throw",
    "static_assert",
    "_Static_assert",
    "asm",
    "__asm__",
    "__asm",
    "defined",
    "int",
    "char",
    "short",
    "long",
    "unsigned",
    "signed",
    "float",
    "double",
    "void",
    "bool",
    "_Bool",
    "const",
    "volatile",
    "static",
    "extern",
    "inline",
    "struct",
    "union",
    "enum",
    "class",
    "typename",
    "template",
    "namespace",
    "using",
    "auto",
    "register",
    "restrict",
    "new",
    "delete",
    "catch",
    "try",
    "goto",
    "break",
    "continue",
    "default",
    "operator",
    "__extension__",
    "__inline",
    "__inline__",
];

struct Parser<'a> {
    src: &'a [u8],
    toks: Vec<Tok>,
}

struct Group {
    open: usize,
    close: usize,
}

struct Signature {
    name: String,
    /// Index (into the declaration slice) of the first token of the definition.
    first: usize,
}

impl<'a> Parser<'a> {
    fn text(&self, t: &Tok) -> &'a [u8] {
        &self.src[t.start..t.end]
    }

    fn is_punct(&self, t: &Tok, p: &[u8]) -> bool {
        t.kind == Kind::Punct && self.text(t) == p
    }

    fn is_word(&self, t: &Tok, w: &str) -> bool {
        t.kind == Kind::Ident && self.text(t) == w.as_bytes()
    }

    fn is_name(&self, t: &Tok) -> bool {
        t.kind == Kind::Ident && !NOT_A_NAME.iter().any(|k| k.as_bytes() == self.text(t))
    }

    fn matching_brace(&self, open: usize) -> Option<usize> {
        let mut depth = 0usize;
        for (k, t) in self.toks.iter().enumerate().skip(open) {
            if self.is_punct(t, b"{") {
                depth += 1;
            } else if self.is_punct(t, b"}") {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
        }
        None
    }

    /// Top-level paren groups of a declaration, plus whether a top-level `=` occurs.
    fn groups(&self, decl: &[Tok]) -> (Vec<Group>, bool) {
        let mut groups = Vec::new();
        let mut has_eq = false;
        let mut depth = 0usize;
        let mut open = 0;
        let mut k = 0;
        while k < decl.len() {
            let t = &decl[k];
            if depth == 0
                && self.is_word(t, "template")
                && decl.get(k + 1).is_some_and(|n| self.is_punct(n, b"<"))
            {
                let mut angle = 0usize;
                k += 1;
                while k < decl.len() {
                    if self.is_punct(&decl[k], b"<") {
                        angle += 1;
                    } else if self.is_punct(&decl[k], b">") {
                        angle -= 1;
                        if angle == 0 {
                            break;
                        }
                    }
                    k += 1;
                }
            } else if self.is_punct(t, b"(") {
                if depth == 0 {
                    open = k;
                }
                depth += 1;
            } else if self.is_punct(t, b")") {
                if depth > 0 {
                    depth -= 1;
                    if depth == 0 {
                        groups.push(Group { open, close: k });
                    }
                }
            } else if depth == 0 && self.is_punct(t, b"=") && !self.in_operator_name(decl, k) {
                has_eq = true;
            }
            k += 1;
        }
        (groups, has_eq)
    }

    fn in_operator_name(&self, decl: &[Tok], k: usize) -> bool {
        (1..=3).any(|back| {
            k >= back
                && self.is_word(&decl[k - back], "operator")
                && decl[k - back + 1..k].iter().all(|t| t.kind == Kind::Punct)
        })
    }

    /// Name of the function whose parameter list opens at `open`, with the
    /// index of the first token of that name.
    fn name_before(&self, decl: &[Tok], open: usize) -> Option<(String, usize)> {
        if open == 0 {
            return None;
        }
        let prev = &decl[open - 1];
        if self.is_name(prev) {
            let mut first = open - 1;
            let mut name = String::from_utf8_lossy(self.text(prev)).into_owned();
            if first >= 1 && self.is_punct(&decl[first - 1], b"~") {
                first -= 1;
                name.insert(0, '~');
            }
            while first >= 2
                && self.is_punct(&decl[first - 1], b"::")
                && decl[first - 2].kind == Kind::Ident
            {
                let scope = String::from_utf8_lossy(self.text(&decl[first - 2]));
                name = format!("{scope}::{name}");
                first -= 2;
            }
            return Some((name, first));
        }
        if prev.kind == Kind::Punct {
            for back in 1..=3 {
                if open < back + 1 {
                    break;
                }
                let at = open - 1 - back;
                if decl[at + 1..open].iter().any(|t| t.kind != Kind::Punct) {
                    break;
                }
                if self.is_word(&decl[at], "operator") {
                    let op: String = decl[at + 1..open]
                        .iter()
                        .map(|t| String::from_utf8_lossy(self.text(t)).into_owned())
                        .collect();
                    return Some((format!("operator{op}"), at));
                }
            }
        }
        None
    }

    fn valid_groups(&self, decl: &[Tok]) -> (Vec<(Group, String, usize)>, bool) {
        let (groups, has_eq) = self.groups(decl);
        let mut out = Vec::new();
        let mut call_operator = false;
        for g in groups {
            if call_operator {
                call_operator = false;
                if g.open > 0 {
                    let at = g.open.saturating_sub(3);
                    out.push((g, "operator()".to_string(), at));
                }
                continue;
            }
            if g.open > 0
                && self.is_word(&decl[g.open - 1], "operator")
                && g.close == g.open + 1
                && decl
                    .get(g.close + 1)
                    .is_some_and(|t| self.is_punct(t, b"("))
            {
                call_operator = true;
                continue;
            }
            if let Some((name, first)) = self.name_before(decl, g.open) {
                out.push((g, name, first));
            }
        }
        (out, has_eq)
    }

    fn find_function(&self, decl: &[Tok]) -> Option<Signature> {
        let (valid, has_eq) = self.valid_groups(decl);
        if has_eq || valid.is_empty() {
            return None;
        }
        let (first_group, first_name, _) = &valid[0];
        let mut chosen = Signature {
            name: first_name.clone(),
            first: 0,
        };
        if is_all_caps(first_name) {
            let close_line = decl[first_group.close].line;
            if let Some((_, name, _)) = valid[1..]
                .iter()
                .find(|(_, _, at)| decl[*at].line > close_line)
            {
                chosen = Signature {
                    name: name.clone(),
                    first: first_group.close + 1,
                };
            }
        }
        Some(chosen)
    }

    /// A `;` inside an old-style parameter declaration list does not end the definition.
    fn kr_pending(&self, decl: &[Tok]) -> bool {
        let (valid, has_eq) = self.valid_groups(decl);
        let Some((g, name, _)) = valid.first() else {
            return false;
        };
        if has_eq || is_all_caps(name) {
            return false;
        }
        let inner = &decl[g.open + 1..g.close];
        let names_only = inner.iter().enumerate().all(|(k, t)| {
            if k % 2 == 0 {
                t.kind == Kind::Ident
            } else {
                self.is_punct(t, b",")
            }
        });
        names_only
            && !inner.is_empty()
            && !(inner.len() == 1 && self.is_word(&inner[0], "void"))
            && decl.get(g.close + 1).is_some_and(|t| t.kind == Kind::Ident)
    }

    fn is_transparent(&self, decl: &[Tok]) -> bool {
        let namespace = decl.iter().any(|t| self.is_word(t, "namespace"))
            && !decl.iter().any(|t| self.is_punct(t, b"("));
        let extern_block =
            decl.len() == 2 && self.is_word(&decl[0], "extern") && decl[1].kind == Kind::Str;
        namespace || extern_block
    }

    fn run(&self) -> Vec<(String, usize, usize)> {
        let toks = &self.toks;
        let mut out: Vec<(String, usize, usize)> = Vec::new();
        let mut decl_start = 0;
        let mut paren = 0usize;
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            match t.kind {
                Kind::Directive(_) if paren == 0 => decl_start = i + 1,
                Kind::Punct => {
                    let p = self.text(t);
                    if p == b"(" {
                        paren += 1;
                    } else if p == b")" {
                        paren = paren.saturating_sub(1);
                    } else if p == b";" && paren == 0 {
                        if !self.kr_pending(&toks[decl_start..i]) {
                            decl_start = i + 1;
                        }
                    } else if p == b"}" {
                        decl_start = i + 1;
                        paren = 0;
                    } else if p == b"{" {
                        let decl = &toks[decl_start..i];
                        if self.is_transparent(decl) {
                            decl_start = i + 1;
                        } else {
                            let sig = self.find_function(decl);
                            let Some(close) = self.matching_brace(i) else {
                                if let Some(sig) = sig {
                                    log::warn!(
                                        "unclosed body for {} at line {}; dropped",
                                        sig.name,
                                        t.line
                                    );
                                }
                                break;
                            };
                            if let Some(sig) = sig {
                                let start = decl.get(sig.first).map(|d| d.line).unwrap_or(t.line);
                                let end = toks[close].line;
                                match out.last() {
                                    Some((_, _, prev_end)) if *prev_end >= start => {
                                        log::debug!(
                                            "{} at line {start} shares a line with the previous function; dropped",
                                            sig.name
                                        );
                                    }
                                    _ => out.push((sig.name, start, end)),
                                }
                            }
                            i = close;
                            decl_start = close + 1;
                            paren = 0;
                        }
                    }
                }
                _ => {}
            }
            i += 1;
        }
        out
    }
}

fn is_all_caps(name: &str) -> bool {
    let base = name.rsplit("::").next().unwrap_or(name);
    base.bytes().any(|b| b.is_ascii_uppercase())
        && base
            .bytes()
            .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
}

/// Byte range of lines `start..=end` (1-based) without the final terminator.
fn line_slice(src: &[u8], starts: &[usize], start: usize, end: usize) -> (usize, usize) {
    let a = starts[start - 1];
    let mut b = starts.get(end).copied().unwrap_or(src.len());
    if b > a && src[b - 1] == b'\n' {
        b -= 1;
        if b > a && src[b - 1] == b'\r' {
            b -= 1;
        }
    }
    (a, b)
}

fn line_starts(src: &[u8]) -> Vec<usize> {
    let mut starts = vec![0];
    starts.extend(
        src.iter()
            .enumerate()
            .filter(|(_, &b)| b == b'\n')
            .map(|(k, _)| k + 1)
            .filter(|&k| k < src.len()),
    );
    starts
}

const C_LIKE: &[&str] = &[
    "c", "h", "cc", "cpp", "cxx", "c++", "hh", "hpp", "hxx", "h++", "inl", "ipp", "tcc",
];

/// Whether a path names a C or C++ source or header file.
pub fn is_c_like(path: &str) -> bool {
    path.rsplit_once('.')
        .is_some_and(|(_, ext)| C_LIKE.iter().any(|e| e.eq_ignore_ascii_case(ext)))
}

/// Function definitions in a source file, sorted by start line, spans disjoint.
pub fn extract_functions_bytes(src: &[u8]) -> Vec<FunctionSnapshot> {
    let toks = active_tokens(
        Lexer {
            src,
            i: 0,
            line: 1,
            toks: Vec::new(),
        }
        .run(),
    );
    let parser = Parser { src, toks };
    let starts = line_starts(src);
    parser
        .run()
        .into_iter()
        .map(|(name, start, end)| {
            let (a, b) = line_slice(src, &starts, start, end);
            let raw = &src[a..b];
            FunctionSnapshot {
                project: String::new(),
                commit: String::new(),
                path: String::new(),
                name,
                start_line: start,
                end_line: end,
                body: String::from_utf8_lossy(raw).into_owned(),
                norm_hash: norm_hash(raw),
            }
        })
        .collect()
}

pub fn extract_functions(source: &str) -> Vec<FunctionSnapshot> {
    extract_functions_bytes(source.as_bytes())
}

/// The function whose span contains `line_no`.
pub fn enclosing_function(
    functions: &[FunctionSnapshot],
    line_no: usize,
) -> Option<&FunctionSnapshot> {
    let idx = functions.partition_point(|f| f.end_line < line_no);
    functions.get(idx).filter(|f| f.contains(line_no))
}

/// Functions of `path` at `commit`, located in that repository and revision.
pub fn functions_at(
    repo: &RepoHandle,
    commit: &CommitRef,
    path: &str,
) -> Result<Vec<FunctionSnapshot>> {
    let bytes = repo.file_bytes_at(commit, path)?;
    Ok(extract_functions_bytes(&bytes)
        .into_iter()
        .map(|f| f.located(repo.project(), &commit.hash, path))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(src: &str) -> Vec<(String, usize, usize)> {
        extract_functions(src)
            .into_iter()
            .map(|f| (f.name, f.start_line, f.end_line))
            .collect()
    }

    fn s(name: &str, a: usize, b: usize) -> (String, usize, usize) {
        (name.to_string(), a, b)
    }

    #[test]
    fn one_liner() {
        let f = extract_functions("int f(void) { return 0; }");
        assert_eq!(f.len(), 1);
        assert_eq!(
            (f[0].name.as_str(), f[0].start_line, f[0].end_line),
            ("f", 1, 1)
        );
        assert_eq!(f[0].body, "int f(void) { return 0; }");
    }

    #[test]
    fn struct_only() {
        assert!(spans("struct s {\n  int a;\n  int (*cb)(void);\n};\n").is_empty());
        assert!(spans("int table[] = { f(1), 2 };\nint (*fp[])(int) = { g };\n").is_empty());
    }

    #[test]
    fn comments_strings_and_directives() {
        let src = r#"#include <stdio.h>
/* int fake(void) { */
static const char *msg = "}{";
// void nope() {
static int
real(int a,
     int b)
{
    char c = '}';
    if (a) { return b; }
#if 0
    {
#else
    {
#endif
    }
    return 0;
}
"#;
        assert_eq!(spans(src), vec![s("real", 5, 18)]);
    }

    #[test]
    fn kr_style_and_macro_prefix() {
        let src = "int\nadd(a, b)\n    int a;\n    int b;\n{\n    return a + b;\n}\n\
                   EXPORT_SYMBOL(add)\nvoid\nlater(void)\n{\n}\n";
        assert_eq!(spans(src), vec![s("add", 1, 7), s("later", 9, 12)]);
    }

    #[test]
    fn prototypes_reset_declaration() {
        let src = "int proto(int);\nint g(void)\n{\n  return proto(1);\n}\n";
        assert_eq!(spans(src), vec![s("g", 2, 5)]);
    }

    #[test]
    fn cpp_shapes() {
        let src =
            "namespace a {\nextern \"C\" {\nint Foo::bar(int x) const\n{\n  return x;\n}\n}\n}\n\
                   Foo::~Foo() { }\nbool operator==(const A &l, const A &r) { return true; }\n\
                   template <typename T = int>\nT id(T v) { return v; }\n\
                   class K { int m() { return 1; } };\n";
        assert_eq!(
            spans(src),
            vec![
                s("Foo::bar", 3, 6),
                s("Foo::~Foo", 9, 9),
                s("operator==", 10, 10),
                s("id", 11, 12),
            ]
        );
    }

    #[test]
    fn unclosed_function_dropped() {
        let src = "int ok(void) { return 1; }\nint bad(void) {\n  if (x) {\n";
        assert_eq!(spans(src), vec![s("ok", 1, 1)]);
    }

    #[test]
    fn same_line_neighbours_do_not_overlap() {
        let src = "int a(void) {\n}  int b(void) {\n}\nint c(void) { }\n";
        assert_eq!(spans(src), vec![s("a", 1, 2), s("c", 4, 4)]);
    }

    #[test]
    fn crlf_body_excludes_final_terminator() {
        let f = extract_functions("void f(void)\r\n{\r\n}\r\nint x;\r\n");
        assert_eq!(f[0].body, "void f(void)\r\n{\r\n}");
    }

    #[test]
    fn enclosing_lookup() {
        let fs = extract_functions("void a(void)\n{\n}\n\nvoid b(void)\n{\n}\n");
        assert_eq!(
            enclosing_function(&fs, 2).map(|f| f.name.as_str()),
            Some("a")
        );
        assert!(enclosing_function(&fs, 4).is_none());
        assert_eq!(
            enclosing_function(&fs, 7).map(|f| f.name.as_str()),
            Some("b")
        );
        assert!(enclosing_function(&fs, 8).is_none());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_body("a\n\tb"), "a b");
        assert_eq!(normalize_body(""), "");
        assert_eq!(normalize_body("  x  \r\n y "), "x y");
    }

    #[test]
    fn cosmetic_modes() {
        assert!(is_cosmetic_change("  if (a)", "if (a)   "));
        assert!(!is_cosmetic_change("if (a)", "if (b)"));
        assert!(!is_cosmetic_change("x = 1; // one", "x = 1;"));
        assert!(is_cosmetic_change_with(
            "x = 1; // one",
            "x = 1;",
            CosmeticMode::WhitespaceAndComments
        ));
        assert!(!is_cosmetic_change_with(
            "s = \"//\";",
            "s = \"\";",
            CosmeticMode::WhitespaceAndComments
        ));
    }
}
