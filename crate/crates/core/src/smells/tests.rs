use std::sync::Arc;

use super::*;
use crate::calltree::build_snapshot;
use crate::catalog::KeywordCatalog;
use crate::clones::find_clones;
use crate::parser::parse_str;

const LOGIN: &str = include_str!("../../tests/fixtures/login.robot");

fn snapshot(files: &[(&str, &str)]) -> Snapshot {
    let asts = files.iter().map(|(p, c)| parse_str(p, c)).collect();
    build_snapshot("v", asts, Arc::new(KeywordCatalog::builtin())).unwrap()
}

fn findings(files: &[(&str, &str)], config: &DetectorConfig) -> Vec<Vec<SmellFinding>> {
    let snap = snapshot(files);
    let clones = find_clones(&snap, config.clone_type);
    snap.tests.iter().map(|t| detect_all(t, &snap, &clones, config)).collect()
}

fn one(src: &str) -> Vec<SmellFinding> {
    findings(&[("t.robot", src)], &DetectorConfig::default()).remove(0)
}

fn get(fs: &[SmellFinding], id: SmellId) -> (usize, usize) {
    let f = fs.iter().find(|f| f.smell == id).unwrap();
    (f.count, f.denominator)
}

fn test_with(body: &str) -> String {
    format!("*** Test Cases ***\nT\n{body}")
}

#[test]
fn login_example() {
    let fs = one(LOGIN);
    assert_eq!(fs.len(), 16);
    assert_eq!(fs.iter().map(|f| f.smell).collect::<Vec<_>>(), SmellId::ALL.to_vec());
    let expect = [
        (SmellId::AoC, (0, 7)),
        (SmellId::CA, (0, 2)),
        (SmellId::HE, (0, 2)),
        (SmellId::HTD, (0, 0)),
        (SmellId::LoE, (0, 3)),
        (SmellId::LTS, (0, 3)),
        (SmellId::MM, (1, 7)),
        (SmellId::MA, (0, 1)),
        (SmellId::N, (0, 3)),
        (SmellId::NL, (0, 0)),
        (SmellId::OT, (7, 13)),
        (SmellId::OtF, (0, 2)),
        (SmellId::OC, (2, 7)),
        (SmellId::SL, (0, 3)),
        (SmellId::SC, (1, 7)),
        (SmellId::SS, (0, 0)),
    ];
    for (id, want) in expect {
        assert_eq!(get(&fs, id), want, "{id}");
    }
    let ss = fs.iter().find(|f| f.smell == SmellId::SS).unwrap();
    assert_eq!(ss.density(), None);
    let oc = fs.iter().find(|f| f.smell == SmellId::OC).unwrap();
    assert!((oc.density().unwrap() - 2.0 / 7.0).abs() < 1e-12);
}

#[test]
fn login_middle_man_and_sneaky_checking_name_the_right_keywords() {
    let snap = snapshot(&[("login.robot", LOGIN)]);
    let clones = find_clones(&snap, CloneType::Type2);
    let cfg = DetectorConfig::default();
    let t = &snap.tests[0];
    let name = |f: &SmellFinding| -> Vec<String> {
        f.nodes
            .iter()
            .map(|l| match l {
                Location::Keyword(k) => snap.keyword_ast(*k).name.clone(),
                other => panic!("{other:?}"),
            })
            .collect()
    };
    assert_eq!(name(&detect(SmellId::MM, t, &snap, &clones, &cfg)), ["Browser is opened to login page"]);
    assert_eq!(name(&detect(SmellId::SC, t, &snap, &clones, &cfg)), ["Welcome Page Should Be Open"]);
}

#[test]
fn empty_test() {
    let fs = one(&test_with("    [Documentation]    nothing\n"));
    for f in &fs {
        if f.smell == SmellId::MA {
            assert_eq!((f.count, f.denominator), (1, 1));
        } else {
            assert_eq!((f.count, f.denominator), (0, 0), "{}", f.smell);
            assert_eq!(f.density(), None);
        }
    }
}

#[test]
fn army_of_clones_across_files() {
    let body = "    Click Button    ok\n    Log    done\n";
    let a = format!("*** Settings ***\nResource    b.resource\n*** Test Cases ***\nT\n    Do It\n*** Keywords ***\nDo It\n{body}");
    let b = format!("*** Keywords ***\nDo That\n{body}");
    let fs = findings(&[("a.robot", &a), ("b.resource", &b)], &DetectorConfig::default()).remove(0);
    assert_eq!(get(&fs, SmellId::AoC), (1, 1));
    let fs = one(&test_with("    Click Button    ok\n"));
    assert_eq!(get(&fs, SmellId::AoC), (0, 0));
}

#[test]
fn conditional_assertion() {
    let fs = one(&test_with(
        "    IF    $x\n        Should Be Equal    a    b\n        Log    checked\n    END\n",
    ));
    assert_eq!(get(&fs, SmellId::CA), (1, 1));
    let fs = one(&test_with(
        "    IF    $x\n        Should Be Equal    a    b\n        Click Button    ok\n    END\n",
    ));
    assert_eq!(get(&fs, SmellId::CA), (0, 1));
    let fs = one(&test_with("    FOR    ${i}    IN    a    b\n        Should Be Equal    ${i}    a\n    END\n"));
    assert_eq!(get(&fs, SmellId::CA), (0, 1));
    let fs = one(&test_with("    Run Keyword If    $x    Should Be Equal    a    b\n"));
    assert_eq!(get(&fs, SmellId::CA), (1, 1));
}

#[test]
fn hardcoded_environment() {
    let fs = one(&test_with("    Open Browser    http://x    Chrome\n"));
    assert_eq!(get(&fs, SmellId::HE), (2, 2));
    let fs = one(&test_with("    Click Button    ok\n"));
    assert_eq!(get(&fs, SmellId::HE), (0, 0));
}

#[test]
fn fixture_smells() {
    let fs = one(&test_with("    [Setup]    Get File    data.csv\n    Click Button    ok\n"));
    assert_eq!(get(&fs, SmellId::HTD), (1, 1));
    let fs = one(&test_with("    [Setup]    Prepare\n    No Operation\n*** Keywords ***\nPrepare\n    Log    starting\n    Click Button    a\n    Input Text    id    x\n"));
    assert_eq!(get(&fs, SmellId::NL), (1, 3));
    assert_eq!(get(&fs, SmellId::HTD), (0, 3));
    let fs = one("*** Settings ***\nSuite Setup    Log    hello\n*** Test Cases ***\nT\n    No Operation\n");
    assert_eq!(get(&fs, SmellId::NL), (1, 1));
}

#[test]
fn lack_of_encapsulation() {
    let fs = one(&test_with("    Click Button    ok\n"));
    assert_eq!(get(&fs, SmellId::LoE), (1, 1));
    let fs = one(&test_with("    Click Button    ok\n    Missing Keyword\n"));
    assert_eq!(get(&fs, SmellId::LoE), (1, 1));
}

#[test]
fn long_test_steps_threshold() {
    let clicks = "    Click Button    a\n".repeat(13);
    let src = format!("*** Test Cases ***\nT\n    Big Step\n    Click Button    z\n*** Keywords ***\nBig Step\n{clicks}");
    let fs = one(&src);
    assert_eq!(get(&fs, SmellId::LTS), (1, 2));
    let cfg = DetectorConfig {
        long_step_threshold: 14,
        ..DetectorConfig::default()
    };
    assert_eq!(get(&findings(&[("t.robot", &src)], &cfg)[0], SmellId::LTS), (0, 2));
    let cfg = DetectorConfig {
        long_step_threshold: 1,
        ..DetectorConfig::default()
    };
    assert_eq!(get(&findings(&[("t.robot", &src)], &cfg)[0], SmellId::LTS), (2, 2));
}

#[test]
fn middle_man_disambiguation() {
    let src = "*** Test Cases ***\nT\n    A\n    B\n    C\n*** Keywords ***\nA\n    Log    x\n    D\nB\n    Click Button    ok\nC\n    Should Be True    1\n    Click Button    ok\nD\n    Click Button    ok\n    Click Button    no\n";
    let fs = one(src);
    assert_eq!(get(&fs, SmellId::MM), (1, 4));
    assert_eq!(get(&fs, SmellId::SC), (0, 4));
}

#[test]
fn missing_assertion_scale_invariance() {
    let fs = one(&test_with("    Click Button    ok\n"));
    assert_eq!(get(&fs, SmellId::MA), (1, 1));
    let fs = one(&test_with("    Click Button    ok\n    Click Button    ok\n    Title Should Be    x\n"));
    assert_eq!(get(&fs, SmellId::MA), (0, 1));
}

#[test]
fn narcissistic() {
    let src = "*** Test Cases ***\nT\n    When I log in\n    Je valide le formulaire\n    Then page is shown\n*** Keywords ***\nI log in\n    No Operation\nJe valide le formulaire\n    No Operation\nPage is shown\n    No Operation\n";
    assert_eq!(get(&one(src), SmellId::N), (2, 3));
    let cfg = DetectorConfig::default().with_languages(&["en".into()]).unwrap();
    assert_eq!(get(&findings(&[("t.robot", src)], &cfg)[0], SmellId::N), (1, 3));
    assert!(DetectorConfig::default().with_languages(&["de".into()]).is_err());
}

#[test]
fn on_the_fly() {
    let fs = one(&test_with("    ${x}=    Get Text    id\n    Should Be Equal    ${y}    ${x}\n"));
    assert_eq!(get(&fs, SmellId::OtF), (1, 1));
    let fs = one(&test_with("    Should Be Equal    ${y}    42\n"));
    assert_eq!(get(&fs, SmellId::OtF), (0, 1));
    let fs = one(&test_with("    Click Button    ok\n"));
    assert_eq!(get(&fs, SmellId::OtF), (0, 0));
}

#[test]
fn sensitive_locators() {
    let fs = one(&test_with(
        "    Click Button    /html/body/div[4]/button\n    Click Button    //button[@id =\"unique-id\"]\n    Click Button    ${unknown}\n",
    ));
    assert_eq!(get(&fs, SmellId::SL), (1, 2));
}

#[test]
fn stinky_synchronization() {
    let fs = one(&test_with("    Sleep    5s\n"));
    assert_eq!(get(&fs, SmellId::SS), (1, 1));
    let fs = one(&test_with("    Wait Until Element Is Visible    x\n"));
    assert_eq!(get(&fs, SmellId::SS), (0, 1));
}

#[test]
fn obscure_test_monotone_in_literals() {
    let fs = one(&test_with("    Input Text    ${a}    ${b}\n"));
    assert_eq!(get(&fs, SmellId::OT), (0, 2));
    let fs = one(&test_with("    Input Text    ${a}    ${b}\n    Input Text    id    x\n"));
    assert_eq!(get(&fs, SmellId::OT), (2, 4));
}

#[test]
fn smell_id_round_trip() {
    for id in SmellId::ALL {
        assert_eq!(id.code().parse::<SmellId>().unwrap(), id);
    }
    assert_eq!("oc".parse::<SmellId>().unwrap(), SmellId::OC);
    assert!("xx".parse::<SmellId>().is_err());
}
