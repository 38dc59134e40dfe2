//! In-memory model of a small C code base: files of functions of lines, each
//! line remembering which commit last touched it.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tag {
    Preamble,
    Header,
    Open,
    Close,
    Return,
    Plain,
    Call,
    Vuln {
        vid: usize,
        introduced: usize,
        traced_to: usize,
        fix: String,
    },
    Guard {
        vid: usize,
    },
    Decoy {
        vid: usize,
        planted: usize,
        twin: String,
        fix: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Line {
    pub text: String,
    pub last: usize,
    pub tag: Tag,
}

impl Line {
    pub fn new(text: impl Into<String>, last: usize, tag: Tag) -> Line {
        Line {
            text: text.into(),
            last,
            tag,
        }
    }

    pub fn is_vuln_of(&self, v: usize) -> bool {
        matches!(self.tag, Tag::Vuln { vid, .. } if vid == v)
    }

    /// Lines a miner follows for a vulnerability: the vulnerable lines, and
    /// a decoy the vulnerable line will later replace.
    pub fn is_tracked_for(&self, v: usize) -> bool {
        matches!(self.tag, Tag::Vuln { vid, .. } | Tag::Decoy { vid, .. } if vid == v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Function {
    pub name: String,
    pub params: String,
    /// Header, `{`, body, `}`.
    pub lines: Vec<Line>,
}

pub(crate) fn header_text(name: &str, params: &str) -> String {
    format!("static int {name}({params})")
}

impl Function {
    pub fn new(name: &str, params: String, statements: Vec<String>, at: usize) -> Function {
        let mut lines = vec![
            Line::new(header_text(name, &params), at, Tag::Header),
            Line::new("{", at, Tag::Open),
        ];
        lines.extend(statements.into_iter().map(|s| Line::new(s, at, Tag::Plain)));
        lines.push(Line::new("    return 0;", at, Tag::Return));
        lines.push(Line::new("}", at, Tag::Close));
        Function {
            name: name.to_string(),
            params,
            lines,
        }
    }

    pub fn body_text(&self) -> String {
        self.lines
            .iter()
            .map(|l| l.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Index of the first line after `{` and of the `}` line.
    pub fn body_range(&self) -> (usize, usize) {
        (2, self.lines.len() - 1)
    }

    /// Index of the line carrying `return`, where insertions stop.
    pub fn return_index(&self) -> usize {
        self.lines
            .iter()
            .rposition(|l| l.tag == Tag::Return)
            .unwrap_or(self.lines.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct File {
    pub preamble: Vec<Line>,
    pub functions: Vec<Function>,
}

impl File {
    pub fn new(module: &str, at: usize) -> File {
        File {
            preamble: vec![
                Line::new(format!("/* {module} */"), at, Tag::Preamble),
                Line::new("#include \"common.h\"", at, Tag::Preamble),
            ],
            functions: Vec::new(),
        }
    }

    /// File text and, per function, its name and 1-based line span.
    pub fn render(&self) -> (String, Vec<(String, usize, usize)>) {
        let mut out = String::new();
        let mut spans = Vec::new();
        let mut n = 0;
        for l in &self.preamble {
            out.push_str(&l.text);
            out.push('\n');
            n += 1;
        }
        for f in &self.functions {
            out.push('\n');
            n += 1;
            let start = n + 1;
            for l in &f.lines {
                out.push_str(&l.text);
                out.push('\n');
                n += 1;
            }
            spans.push((f.name.clone(), start, n));
        }
        (out, spans)
    }

    /// 1-based line number of `function`'s line `idx`.
    pub fn line_no(&self, function: usize, idx: usize) -> usize {
        let mut n = self.preamble.len();
        for f in &self.functions[..function] {
            n += 1 + f.lines.len();
        }
        n + 1 + idx + 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Model {
    pub files: BTreeMap<String, File>,
}

/// Where a function sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct FnPos<'a> {
    pub path: &'a str,
    pub index: usize,
}

impl Model {
    pub fn find(&self, name: &str) -> Option<FnPos<'_>> {
        self.files.iter().find_map(|(path, file)| {
            file.functions
                .iter()
                .position(|f| f.name == name)
                .map(|index| FnPos { path, index })
        })
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut Function> {
        self.files
            .values_mut()
            .flat_map(|f| f.functions.iter_mut())
            .find(|f| f.name == name)
    }

    pub fn contains_text(&self, text: &str) -> bool {
        self.files.values().any(|f| {
            f.preamble.iter().any(|l| l.text == text)
                || f.functions
                    .iter()
                    .any(|func| func.lines.iter().any(|l| l.text == text))
        })
    }

    /// The function holding most lines tracked for `vid`, with those lines'
    /// 1-based numbers.
    pub fn locate_tracked(&self, vid: usize) -> Option<Located> {
        self.locate_by(|l| l.is_tracked_for(vid))
    }

    pub fn locate_vuln(&self, vid: usize) -> Option<Located> {
        self.locate_by(|l| l.is_vuln_of(vid))
    }

    fn locate_by(&self, pred: impl Fn(&Line) -> bool) -> Option<Located> {
        let mut best: Option<Located> = None;
        for (path, file) in &self.files {
            for (fi, f) in file.functions.iter().enumerate() {
                let hits: Vec<(usize, usize)> = f
                    .lines
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| pred(l))
                    .map(|(i, _)| (i, file.line_no(fi, i)))
                    .collect();
                if hits.is_empty() {
                    continue;
                }
                if best
                    .as_ref()
                    .is_some_and(|b| b.line_idx.len() >= hits.len())
                {
                    continue;
                }
                best = Some(Located {
                    path: path.clone(),
                    function: f.name.clone(),
                    start_line: file.line_no(fi, 0),
                    body: f.body_text(),
                    line_idx: hits.iter().map(|h| h.0).collect(),
                    line_nos: hits.iter().map(|h| h.1).collect(),
                    lines: hits.iter().map(|h| f.lines[h.0].clone()).collect(),
                });
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Located {
    pub path: String,
    pub function: String,
    pub start_line: usize,
    pub body: String,
    pub line_idx: Vec<usize>,
    pub line_nos: Vec<usize>,
    pub lines: Vec<Line>,
}

const CALLEES: &[&str] = &[
    "avio_rb32",
    "avio_rl16",
    "bytestream_get",
    "ff_get_buffer",
    "av_malloc",
    "read_chunk",
    "parse_field",
    "get_bits",
    "skip_bytes",
    "update_state",
];

const FIELDS: &[&str] = &[
    "size", "count", "offset", "flags", "width", "height", "index", "pos",
];

/// Generates unique, plausible C statements from templates.
pub(crate) struct Namer {
    pub rng: ChaCha8Rng,
    next: u64,
}

impl Namer {
    pub fn new(rng: ChaCha8Rng) -> Namer {
        Namer { rng, next: 0 }
    }

    fn uid(&mut self) -> u64 {
        self.next += 1;
        self.next
    }

    fn pick<'a>(&mut self, from: &[&'a str]) -> &'a str {
        from.choose(&mut self.rng).expect("non-empty")
    }

    pub fn params(&mut self) -> String {
        let u = self.uid();
        format!("Context *ctx, int arg{u}")
    }

    pub fn statement(&mut self) -> String {
        let u = self.uid();
        let callee = self.pick(CALLEES);
        let field = self.pick(FIELDS);
        let k: u32 = self.rng.gen_range(1..64);
        match self.rng.gen_range(0..5) {
            0 => format!("    int v{u} = ctx->{field} + {k};"),
            1 => format!("    ctx->{field}{u} = {callee}(ctx, {k});"),
            2 => format!("    if (ctx->{field} > {k}) ctx->state{u} = {k};"),
            3 => format!("    status{u} = {callee}(ctx->pb, {k});"),
            _ => format!("    log_trace(ctx, \"{field} step {u}\", {k});"),
        }
    }

    pub fn statements(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.statement()).collect()
    }

    /// A vulnerable statement and its fixed replacement.
    pub fn vuln_pair(&mut self) -> (String, String) {
        let u = self.uid();
        match self.rng.gen_range(0..5) {
            0 => (
                format!("    memcpy(dst{u}, src{u}, len{u});"),
                format!("    memcpy(dst{u}, src{u}, FFMIN(len{u}, sizeof(dst{u})));"),
            ),
            1 => (
                format!("    buf{u}[idx{u}] = avio_r8(ctx->pb);"),
                format!("    if (idx{u} < BUF_SIZE) buf{u}[idx{u}] = avio_r8(ctx->pb);"),
            ),
            2 => (
                format!("    strcpy(name{u}, ctx->tag_str);"),
                format!("    av_strlcpy(name{u}, ctx->tag_str, sizeof(name{u}));"),
            ),
            3 => (
                format!("    av_free(ptr{u});"),
                format!("    av_freep(&ptr{u});"),
            ),
            _ => (
                format!("    size{u} = count{u} * elem_size;"),
                format!("    size{u} = av_size_mult(count{u}, elem_size);"),
            ),
        }
    }

    /// A decoy line, its near-identical vulnerable twin, and the twin's fix.
    pub fn decoy_triple(&mut self) -> (String, String, String) {
        let u = self.uid();
        match self.rng.gen_range(0..3) {
            0 => (
                format!("    len{u} = read_ism_header(ctx->pb, 8);"),
                format!("    len{u} = read_psp_header(ctx->pb, 8);"),
                format!("    len{u} = read_psp_header(ctx->pb, FFMIN(ctx->size, 8));"),
            ),
            1 => (
                format!("    if (type{u} == TAG_ISM) skip{u} = avio_rb16(ctx->pb);"),
                format!("    if (type{u} == TAG_PSP) skip{u} = avio_rb32(ctx->pb);"),
                format!("    if (type{u} == TAG_PSP) skip{u} = avio_rb16(ctx->pb);"),
            ),
            _ => (
                format!("    n{u} = ism_entries(ctx, hdr{u}.count);"),
                format!("    n{u} = psp_entries(ctx, hdr{u}.count);"),
                format!("    n{u} = psp_entries(ctx, FFMIN(hdr{u}.count, MAX_ENTRIES));"),
            ),
        }
    }

    pub fn guard(&mut self) -> [String; 2] {
        let u = self.uid();
        [
            format!("    if (ctx->size < need{u})"),
            format!("        return AVERROR_INVALIDDATA; /* guard {u} */"),
        ]
    }

    pub fn call(&mut self, callee: &str) -> String {
        let u = self.uid();
        format!("    ret{u} = {callee}(ctx);")
    }

    pub fn custom_fix(&mut self) -> String {
        let u = self.uid();
        format!("    if (check_bounds{u}(ctx) < 0) return AVERROR_INVALIDDATA;")
    }
}

/// Flip the indentation of a line between four spaces and a tab.
pub(crate) fn reindent(text: &str) -> String {
    if let Some(rest) = text.strip_prefix('\t') {
        format!("    {rest}")
    } else if let Some(rest) = text.strip_prefix("    ") {
        format!("\t{rest}")
    } else {
        format!("\t{}", text.trim_start())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn render_spans_and_line_numbers() {
        let mut namer = Namer::new(ChaCha8Rng::seed_from_u64(1));
        let mut file = File::new("m", 0);
        for name in ["a", "b"] {
            let p = namer.params();
            let s = namer.statements(2);
            file.functions.push(Function::new(name, p, s, 0));
        }
        let (text, spans) = file.render();
        // preamble 2, blank, a: 6 lines (4..9), blank, b: 11..16
        assert_eq!(spans, vec![("a".into(), 4, 9), ("b".into(), 11, 16)]);
        assert_eq!(file.line_no(1, 0), 11);
        assert_eq!(
            text.lines().nth(10).unwrap(),
            file.functions[1].lines[0].text
        );
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn reindent_round_trips() {
        assert_eq!(reindent("    x;"), "\tx;");
        assert_eq!(reindent(&reindent("    x;")), "    x;");
    }
}
