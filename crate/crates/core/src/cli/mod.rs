//! The `feather` command line: argument handling, the run transcript and
//! exit codes.

mod eil;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub use eil::dump_intermediate;

use crate::commands::{run_script, RunMode, RunReport};
use crate::model::FeatureModel;
use crate::syntax::ast::Command;
use crate::syntax::{load_commands, load_script, serialize_declarations};
use crate::tvl::{export_tvl_with_enum, parse_tvl};

pub const USAGE: &str = "\
-i : Running Mode - Ignore all errors & warnings
-e : Running Mode - Stop on first error (ignore warnings)
-w : Running Mode - Stop on first warning
-f <feather-file> : Input Feather file (declarations + commands)
-d <feather-declarations-file> : Input Feather declarations file
-t <tvl-declarations-file> : Input TVL declarations file
-c <feather-commands-file> : Input Feather commands file
-o <feather-declarations-file> : Output Feather declarations file
-ot <tvl-declarations-file> : Output TVL declarations file
-h : Display this help message
-eil : Also write the intermediate dump next to the input (<input>.eil)
";

pub const EXIT_OK: i32 = 0;
/// A mode halted the run or some command reported an error.
pub const EXIT_COMMAND_FAILURE: i32 = 1;
/// Bad arguments, unreadable input, parse failure or unwritable output.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Declarations {
    Feather(PathBuf),
    Tvl(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Combined(PathBuf),
    Split {
        declarations: Declarations,
        commands: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub mode: RunMode,
    pub input: Input,
    pub output: Option<PathBuf>,
    pub tvl_output: Option<PathBuf>,
    pub write_eil: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Invocation {
    Help,
    Run(CliConfig),
}

pub fn parse_args<S: AsRef<str>>(args: &[S]) -> Result<Invocation, String> {
    let mut mode: Option<RunMode> = None;
    let (mut f, mut d, mut t, mut c, mut o, mut ot) = (None, None, None, None, None, None);
    let mut write_eil = false;
    let mut it = args.iter().map(AsRef::as_ref);
    while let Some(arg) = it.next() {
        let slot = match arg {
            "-h" => return Ok(Invocation::Help),
            "-i" | "-e" | "-w" => {
                let m = match arg {
                    "-i" => RunMode::IgnoreAll,
                    "-e" => RunMode::StopOnError,
                    _ => RunMode::StopOnWarning,
                };
                if mode.is_some_and(|old| old != m) {
                    return Err("only one running mode may be given".into());
                }
                mode = Some(m);
                continue;
            }
            "-eil" => {
                write_eil = true;
                continue;
            }
            "-f" => &mut f,
            "-d" => &mut d,
            "-t" => &mut t,
            "-c" => &mut c,
            "-o" => &mut o,
            "-ot" => &mut ot,
            other => return Err(format!("unknown option {other}")),
        };
        let value = it.next().ok_or_else(|| format!("{arg} needs a file name"))?;
        if slot.replace(PathBuf::from(value)).is_some() {
            return Err(format!("{arg} given more than once"));
        }
    }
    let input = match (f, d, t, c) {
        (Some(f), None, None, None) => Input::Combined(f),
        (Some(_), ..) => return Err("-f cannot be combined with -d, -t or -c".into()),
        (None, Some(_), Some(_), _) => return Err("-d and -t are mutually exclusive".into()),
        (None, Some(d), None, c) => Input::Split {
            declarations: Declarations::Feather(d),
            commands: c,
        },
        (None, None, Some(t), c) => Input::Split {
            declarations: Declarations::Tvl(t),
            commands: c,
        },
        (None, None, None, _) => return Err("no input given; use -f, -d or -t".into()),
    };
    Ok(Invocation::Run(CliConfig {
        mode: mode.unwrap_or_default(),
        input,
        output: o,
        tvl_output: ot,
        write_eil,
    }))
}

/// Why a run ended before executing commands or after failing to save.
struct Fatal(String);

fn read(path: &Path) -> Result<String, Fatal> {
    fs::read_to_string(path).map_err(|e| Fatal(format!("cannot read {}: {e}", path.display())))
}

struct Loaded {
    model: FeatureModel,
    commands: Vec<Command>,
    string_enum: Option<Vec<String>>,
    /// The file the intermediate dump is named after.
    primary: PathBuf,
}

fn parsing<W: Write>(out: &mut W, path: &Path) -> io::Result<()> {
    write!(out, "Parsing [{}]... ", path.display())
}

fn load<W: Write>(input: &Input, out: &mut W) -> io::Result<Result<Loaded, Fatal>> {
    macro_rules! step {
        ($path:expr, $e:expr) => {{
            parsing(out, $path)?;
            match $e {
                Ok(v) => {
                    writeln!(out, "OK")?;
                    v
                }
                Err(Fatal(m)) => {
                    writeln!(out, "FAILED")?;
                    return Ok(Err(Fatal(m)));
                }
            }
        }};
    }
    let fatal = |e: &dyn std::fmt::Display| Fatal(e.to_string());
    Ok(Ok(match input {
        Input::Combined(path) => {
            let (model, commands) = step!(path, read(path).and_then(|t| load_script(&t).map_err(|e| fatal(&e))));
            Loaded {
                model,
                commands,
                string_enum: None,
                primary: path.clone(),
            }
        }
        Input::Split {
            declarations,
            commands,
        } => {
            let (model, string_enum, decl_path) = match declarations {
                Declarations::Feather(path) => {
                    let model = step!(
                        path,
                        read(path).and_then(|t| match load_script(&t) {
                            Ok((m, cmds)) if cmds.is_empty() => Ok(m),
                            Ok(_) => Err(Fatal("the declarations file contains commands".into())),
                            Err(e) => Err(fatal(&e)),
                        })
                    );
                    (model, None, path)
                }
                Declarations::Tvl(path) => {
                    let t = step!(path, read(path).and_then(|t| parse_tvl(&t).map_err(|e| fatal(&e))));
                    (t.model, t.string_enum, path)
                }
            };
            let (cmds, primary) = match commands {
                Some(path) => (
                    step!(path, read(path).and_then(|t| load_commands(&t).map_err(|e| fatal(&e)))),
                    path.clone(),
                ),
                None => (Vec::new(), decl_path.clone()),
            };
            Loaded {
                model,
                commands: cmds,
                string_enum,
                primary,
            }
        }
    }))
}

fn eil_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".eil");
    PathBuf::from(s)
}

fn save(config: &CliConfig, model: &FeatureModel, string_enum: Option<&[String]>) -> Result<(), Fatal> {
    if let Some(path) = &config.output {
        fs::write(path, serialize_declarations(model))
            .map_err(|e| Fatal(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = &config.tvl_output {
        let text = export_tvl_with_enum(model, string_enum).map_err(|e| Fatal(e.to_string()))?;
        fs::write(path, text).map_err(|e| Fatal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn diagnostics_block<W: Write>(out: &mut W, report: &RunReport) -> io::Result<()> {
    if report.diagnostics.is_empty() {
        return Ok(());
    }
    writeln!(out, "-----\nErrors & Warnings\n=====")?;
    for d in &report.diagnostics {
        writeln!(out, "{d}")?;
    }
    writeln!(out, "-----")
}

/// Runs one invocation, writing the transcript to `out` and fatal errors
/// plus usage text to `err`. Returns the process exit code.
pub fn run<S: AsRef<str>, W: Write, E: Write>(args: &[S], out: &mut W, err: &mut E) -> io::Result<i32> {
    let config = match parse_args(args) {
        Ok(Invocation::Help) => {
            out.write_all(USAGE.as_bytes())?;
            return Ok(EXIT_OK);
        }
        Ok(Invocation::Run(c)) => c,
        Err(m) => {
            writeln!(err, "error: {m}")?;
            err.write_all(USAGE.as_bytes())?;
            return Ok(EXIT_USAGE);
        }
    };
    writeln!(out, "*****\nFeather 1.0 Parser\n-----")?;
    let loaded = match load(&config.input, out)? {
        Ok(l) => l,
        Err(Fatal(m)) => {
            writeln!(err, "{m}")?;
            return Ok(EXIT_USAGE);
        }
    };
    if config.write_eil {
        let path = eil_path(&loaded.primary);
        write!(out, "Generating intermediate language code file [{}]... ", path.display())?;
        if let Err(e) = fs::write(&path, dump_intermediate(&loaded.model, &loaded.commands)) {
            writeln!(out, "FAILED")?;
            writeln!(err, "cannot write {}: {e}", path.display())?;
            err.write_all(USAGE.as_bytes())?;
            return Ok(EXIT_USAGE);
        }
        writeln!(out, "OK")?;
    } else {
        writeln!(out, "Generating intermediate language code... OK")?;
    }
    writeln!(out, "DONE!\n*****")?;

    let mut model = loaded.model;
    write!(out, "Executing the commands... ")?;
    let report = run_script(&mut model, &loaded.commands, config.mode);
    match report.halted_at {
        Some(n) => writeln!(out, "HALTED at cmd #{n}")?,
        None => writeln!(out, "DONE!")?,
    }
    diagnostics_block(out, &report)?;

    if config.output.is_some() || config.tvl_output.is_some() {
        write!(out, "Saving the transformed model... ")?;
        if let Err(Fatal(m)) = save(&config, &model, loaded.string_enum.as_deref()) {
            writeln!(out, "FAILED")?;
            writeln!(err, "{m}")?;
            err.write_all(USAGE.as_bytes())?;
            return Ok(EXIT_USAGE);
        }
        writeln!(out, "DONE!")?;
    }
    Ok(if report.halted_at.is_some() || report.has_errors() {
        EXIT_COMMAND_FAILURE
    } else {
        EXIT_OK
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> CliConfig {
        match parse_args(args).unwrap() {
            Invocation::Run(c) => c,
            Invocation::Help => panic!("help"),
        }
    }

    #[test]
    fn argument_forms() {
        let c = config(&["-f", "in.feaf", "-o", "out.fm"]);
        assert_eq!(c.mode, RunMode::StopOnError);
        assert_eq!(c.input, Input::Combined("in.feaf".into()));
        let c = config(&["-w", "-t", "m.tvl", "-c", "cmds", "-ot", "o.tvl", "-eil"]);
        assert_eq!(c.mode, RunMode::StopOnWarning);
        assert!(c.write_eil);
        assert_eq!(c.tvl_output, Some("o.tvl".into()));
        assert!(matches!(c.input, Input::Split { declarations: Declarations::Tvl(_), commands: Some(_) }));
        assert_eq!(parse_args(&["-o", "x", "-h"]).unwrap(), Invocation::Help);
    }

    #[test]
    fn argument_errors() {
        for bad in [
            &["-f", "a", "-d", "b"][..],
            &["-d", "a", "-t", "b"],
            &["-c", "x"],
            &["-f"],
            &["-x"],
            &["-i", "-w", "-f", "a"],
            &["-f", "a", "-f", "b"],
            &[],
        ] {
            assert!(parse_args(bad).is_err(), "{bad:?}");
        }
    }
}
