//! Synthetic suites for benchmarking.

use std::fmt::Write;

const STEPS: &[&str] = &[
    "Click Button    id=submit",
    "Input Text    /html/body/div[2]/form/input[1]    ${USER}",
    "Title Should Be    Welcome",
    "Sleep    1s",
    "Log    checkpoint",
    "Login With    ${USER}    secret",
    "Wait Until Page Contains    done",
    "Should Be Equal    ${x}    42",
];

/// A suite of `tests` test cases over a shared keyword layer. `variant` perturbs the text
/// so consecutive variants differ like successive commits.
pub fn suite(tests: usize, variant: usize) -> String {
    let mut out = String::from("*** Variables ***\n${USER}    demo\n\n*** Test Cases ***\n");
    for t in 0..tests {
        writeln!(out, "Case {t}").unwrap();
        for s in 0..6 {
            let pick = (t * 7 + s * 3 + variant * (t % 3)) % STEPS.len();
            writeln!(out, "    {}", STEPS[pick]).unwrap();
        }
    }
    out.push_str("\n*** Keywords ***\nLogin With\n    [Arguments]    ${name}    ${pass}\n");
    out.push_str("    Input Text    id=user    ${name}\n    Input Text    id=pass    ${pass}\n");
    out.push_str("    Click Button    id=login\n    Check Home\n");
    out.push_str("Check Home\n    Title Should Be    Home\n");
    out
}
