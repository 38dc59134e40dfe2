//! Named, seed-parameterized history shapes.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Event, HistorySpec};
use crate::error::{Error, Result};

const NAMES: &[(&str, &str)] = &[
    ("src/demux.c", "read_header"),
    ("src/decoder.c", "decode_frame"),
    ("src/parser.c", "parse_packet"),
    ("src/codec.c", "init_context"),
    ("src/io.c", "read_chunk"),
];

struct Builder {
    rng: ChaCha8Rng,
    name: &'static str,
    seed: u64,
    events: Vec<Event>,
    path: String,
    target: String,
    sibling: String,
}

impl Builder {
    fn new(name: &'static str, seed: u64) -> Builder {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f0f9e);
        let (path, target) = *NAMES.choose(&mut rng).expect("non-empty");
        let mut b = Builder {
            rng,
            name,
            seed,
            events: Vec::new(),
            path: path.to_string(),
            target: target.to_string(),
            sibling: format!("{target}_tail"),
        };
        let n = b.rng.gen_range(4..8);
        b.push(Event::AddFunction {
            path: b.path.clone(),
            name: b.target.clone(),
            statements: n,
        });
        let n = b.rng.gen_range(3..6);
        b.push(Event::AddFunction {
            path: b.path.clone(),
            name: b.sibling.clone(),
            statements: n,
        });
        b
    }

    fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    /// Up to `max` edits, mostly of functions other than the target.
    fn noise(&mut self, max: usize, target_too: bool) {
        let n = self.rng.gen_range(0..=max);
        for _ in 0..n {
            let function = match self.rng.gen_range(0..3) {
                0 if target_too => self.target.clone(),
                1 => "helper_0".to_string(),
                _ => self.sibling.clone(),
            };
            self.push(Event::EditLine { function });
        }
    }

    fn edit_target(&mut self) {
        self.push(Event::EditLine {
            function: self.target.clone(),
        });
    }

    fn introduce(&mut self, vid: usize) {
        self.push(Event::IntroduceVuln {
            vid,
            function: self.target.clone(),
            template: None,
            guarded: false,
        });
    }

    fn fix(&mut self, vid: usize) {
        self.push(Event::FixVuln { vid });
    }

    fn finish(self) -> HistorySpec {
        HistorySpec {
            name: self.name.to_string(),
            seed: self.seed,
            n_functions: 2,
            initial_file: "src/util.c".into(),
            events: self.events,
        }
    }
}

pub const PRESETS: &[&str] = &[
    "add-only",
    "clean-chain",
    "whitespace-skip",
    "rename-file",
    "extract-method-move",
    "move-function-to-file",
    "function-rename",
    "refactor-chain",
    "two-line-lic",
    "near-identical-line-trap",
    "context-removal-trap",
];

/// Presets whose tracer and miner answers are exact.
pub const EXACT_PRESETS: &[&str] = &[
    "clean-chain",
    "whitespace-skip",
    "rename-file",
    "extract-method-move",
    "move-function-to-file",
    "function-rename",
    "refactor-chain",
    "two-line-lic",
];

pub fn preset_names() -> &'static [&'static str] {
    PRESETS
}

pub fn preset(name: &str, seed: u64) -> Result<HistorySpec> {
    let name: &'static str = PRESETS
        .iter()
        .copied()
        .find(|p| *p == name)
        .ok_or_else(|| {
            Error::InvalidSpec(format!(
                "unknown preset {name:?}; known: {}",
                PRESETS.join(", ")
            ))
        })?;
    if name == "refactor-chain" {
        return Ok(refactor_chain(seed));
    }
    let mut b = Builder::new(name, seed);
    match name {
        "add-only" => b.noise(3, true),
        "clean-chain" => {
            b.noise(2, true);
            b.introduce(0);
            b.noise(2, false);
            b.edit_target();
            b.noise(2, true);
            if b.rng.gen_bool(0.5) {
                b.push(Event::IntroduceVuln {
                    vid: 1,
                    function: b.sibling.clone(),
                    template: None,
                    guarded: false,
                });
                b.edit_target();
                b.fix(1);
            }
            b.fix(0);
        }
        "whitespace-skip" => {
            b.introduce(0);
            b.noise(1, true);
            b.push(Event::WhitespaceEdit {
                function: b.target.clone(),
                vid: Some(0),
            });
            b.noise(1, false);
            if b.rng.gen_bool(0.5) {
                b.push(Event::WhitespaceEdit {
                    function: b.target.clone(),
                    vid: None,
                });
            }
            b.edit_target();
            b.fix(0);
        }
        "rename-file" => {
            b.introduce(0);
            b.noise(2, true);
            let to = b.path.replace(".c", "_legacy.c");
            b.push(Event::RenameFile {
                from: b.path.clone(),
                to,
            });
            b.edit_target();
            b.noise(1, false);
            b.fix(0);
        }
        "extract-method-move" => {
            b.noise(1, false);
            b.introduce(0);
            b.noise(1, true);
            b.push(Event::ExtractMethod {
                function: b.target.clone(),
                vid: 0,
                new_name: format!("{}_part", b.target),
            });
            b.noise(1, false);
            b.push(Event::EditLine {
                function: format!("{}_part", b.target),
            });
            b.fix(0);
        }
        "move-function-to-file" => {
            b.introduce(0);
            b.push(Event::WhitespaceEdit {
                function: b.target.clone(),
                vid: Some(0),
            });
            b.push(Event::MoveFunctionToFile {
                function: b.target.clone(),
                to: "src/moved.c".into(),
            });
            b.noise(1, true);
            b.fix(0);
        }
        "function-rename" => {
            b.introduce(0);
            b.edit_target();
            let to = format!("{}_impl", b.target);
            b.push(Event::RenameFunction {
                from: b.target.clone(),
                to: to.clone(),
            });
            b.target = to;
            b.noise(1, true);
            b.fix(0);
        }
        "two-line-lic" => {
            b.introduce(0);
            b.edit_target();
            b.noise(1, false);
            b.introduce(0);
            b.edit_target();
            b.noise(1, true);
            b.fix(0);
        }
        "near-identical-line-trap" => {
            b.push(Event::PlantDecoy {
                vid: 0,
                function: b.target.clone(),
            });
            b.edit_target();
            b.noise(1, false);
            b.introduce(0);
            b.edit_target();
            b.fix(0);
        }
        "context-removal-trap" => {
            b.push(Event::IntroduceVuln {
                vid: 0,
                function: b.target.clone(),
                template: None,
                guarded: true,
            });
            b.edit_target();
            b.push(Event::RemoveGuard { vid: 0 });
            b.edit_target();
            b.fix(0);
        }
        _ => unreachable!("listed preset"),
    }
    Ok(b.finish())
}

/// Introduce, extract into a new function, rename the file, re-indent, fix.
fn refactor_chain(seed: u64) -> HistorySpec {
    let path = "libavformat/asfdec_f.c".to_string();
    let events = vec![
        Event::AddFunction {
            path: path.clone(),
            name: "asf_read_header".into(),
            statements: 7,
        },
        Event::AddFunction {
            path: path.clone(),
            name: "asf_read_packet".into(),
            statements: 5,
        },
        Event::IntroduceVuln {
            vid: 0,
            function: "asf_read_header".into(),
            template: None,
            guarded: false,
        },
        Event::EditLine {
            function: "asf_read_packet".into(),
        },
        Event::ExtractMethod {
            function: "asf_read_header".into(),
            vid: 0,
            new_name: "asf_read_marker".into(),
        },
        Event::RenameFile {
            from: path,
            to: "libavformat/asfdec.c".into(),
        },
        Event::WhitespaceEdit {
            function: "asf_read_marker".into(),
            vid: Some(0),
        },
        Event::FixVuln { vid: 0 },
    ];
    HistorySpec {
        name: "refactor-chain".into(),
        seed,
        n_functions: 1,
        initial_file: "libavformat/utils.c".into(),
        events,
    }
}
