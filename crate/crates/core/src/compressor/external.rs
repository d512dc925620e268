//! Runs an external compression program on a temporary file and reports the
//! size of the file it produces.

use std::fs::File;
use std::process::{Command, Stdio};

use super::CompressError;

pub(crate) fn compressed_size(id: &str, command: &[String], input: &[u8]) -> Result<u64, CompressError> {
    let fail = |message: String| CompressError::External { id: id.to_string(), message };

    let dir = tempfile::tempdir().map_err(|e| fail(format!("temporary directory: {e}")))?;
    let in_path = dir.path().join("input.bin");
    // Some archivers append their own extension unless one is present.
    let out_path = dir.path().join("output.cmp");
    std::fs::write(&in_path, input).map_err(|e| fail(format!("writing input: {e}")))?;

    let substitute = |arg: &String| {
        arg.replace("{in}", &in_path.to_string_lossy())
            .replace("{out}", &out_path.to_string_lossy())
    };
    let uses_out = command.iter().any(|a| a.contains("{out}"));
    let mut cmd = Command::new(&command[0]);
    cmd.args(command[1..].iter().map(substitute)).stdin(Stdio::null()).stderr(Stdio::piped());
    if uses_out {
        cmd.stdout(Stdio::null());
    } else {
        let out = File::create(&out_path).map_err(|e| fail(format!("creating output: {e}")))?;
        cmd.stdout(out);
    }

    let output = cmd.output().map_err(|e| fail(format!("cannot run `{}`: {e}", command[0])))?;
    if !output.status.success() {
        return Err(fail(format!(
            "`{}` exited with {}: {}",
            command[0],
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let size = std::fs::metadata(&out_path)
        .map_err(|e| fail(format!("reading output size: {e}")))?
        .len();
    Ok(size)
}
