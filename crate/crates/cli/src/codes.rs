use std::path::PathBuf;

use comet_core::{select_ocp_set, verify_ocp, CodeSet, OcpVerification};

use crate::output::write_text;
use crate::{load_scenario, CliResult, CodesArgs};

#[derive(Debug, Clone)]
pub struct CodesOutcome {
    pub code_set: CodeSet,
    pub verification: OcpVerification,
    pub files: Vec<PathBuf>,
    pub log: Vec<String>,
}

/// Search, brute-force verify and write `codes.json` plus `codes_log.txt`.
pub fn cmd_codes(args: &CodesArgs) -> CliResult<CodesOutcome> {
    let elements = match (args.elements, &args.scenario) {
        (Some(n), _) => n,
        (None, Some(path)) => load_scenario(path)?.n_elements,
        (None, None) => 8,
    };
    let set = select_ocp_set(args.length, 2 * elements)?;
    let verification = verify_ocp(&set);
    let mut log = vec![
        format!("code length {}", set.length()),
        format!("elements {elements}, channels {}", set.channels()),
        format!("channel walsh indexes {:?}", set.channel_indexes()),
        format!(
            "products {}, dot products checked {}, violations {}",
            verification.products, verification.dot_products_checked, verification.violations
        ),
    ];
    if verification.violations != 0 {
        return Err(crate::CliError::Usage(format!(
            "code set failed verification with {} violations",
            verification.violations
        )));
    }
    log.push("all products orthogonal to each other, to DC and to every code".into());
    let mut json = set.to_json()?;
    json.push('\n');
    let files = vec![
        write_text(&args.common.out, "codes.json", &json)?,
        write_text(&args.common.out, "codes_log.txt", &(log.join("\n") + "\n"))?,
    ];
    Ok(CodesOutcome { code_set: set, verification, files, log })
}
