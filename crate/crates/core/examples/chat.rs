//! Scripted chat session against the rule agent. Run the `chat` subcommand
//! of the binary for an interactive one.

use std::io::Cursor;

use advdialog::cli::{run_with_io, Io};

fn main() {
    let script = "inform(moviename=zootopia)\nnot a frame\ndeny()\n";
    let mut input = Cursor::new(script.as_bytes());
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let code = run_with_io(
        ["advdialog", "chat", "--agent", "rule", "--seed", "3"],
        &mut Io {
            input: &mut input,
            out: &mut out,
            err: &mut err,
            run_root: std::env::temp_dir().join("advdialog-runs"),
        },
    );
    std::process::exit(code);
}
