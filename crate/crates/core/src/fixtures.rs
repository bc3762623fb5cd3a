//! Embedded corpus of counterexample models and tests, with the documented
//! verdicts attached as expectations. Pair models contain both compared
//! states (`s1`, `s2`); tests parse as NPT documents.
//!
//! Fixtures with symbolic probabilities take named parameters `p1`, `p2`
//! with defaults 1/3 and 2/3; any override must keep p1 + p2 = 1 with both
//! in (0, 1).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::Nplts;
use crate::npt::Npt;
use crate::rational::{format_rat, parse_rat, rat, rat_one, rat_zero, Rat};
use crate::textfmt;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("parameter constraint violated: {0}")]
    ParameterConstraintViolation(String),
    #[error("fixture failed to parse: {0}")]
    Parse(#[from] textfmt::ParseError),
    #[error("fixture is not a test: {0}")]
    Npt(#[from] crate::npt::NptError),
}

pub const MODEL_NAMES: &[&str] = &[
    "fig1a", "fig1b", "fig3", "fig4", "fig6", "fig7", "fig9", "fig11", "fig13", "fig14",
];

pub const TEST_NAMES: &[&str] = &[
    "fig5_test",
    "fig6_test",
    "fig7_test",
    "fig9_test",
    "fig11_test",
    "fig14_test",
];

/// Resolved parameters after applying overrides to the defaults.
#[derive(Debug, Clone)]
pub struct Params {
    pub p1: Rat,
    pub p2: Rat,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            p1: rat(1, 3),
            p2: rat(2, 3),
        }
    }
}

impl Params {
    /// Applies overrides. A lone `p1` fixes `p2 = 1 - p1`.
    pub fn resolve(overrides: &BTreeMap<String, String>) -> Result<Params, FixtureError> {
        let mut params = Params::default();
        let mut p2_given = false;
        for (key, value) in overrides {
            let v = parse_rat(value)
                .map_err(FixtureError::ParameterConstraintViolation)?;
            match key.as_str() {
                "p1" => params.p1 = v,
                "p2" => {
                    params.p2 = v;
                    p2_given = true;
                }
                other => {
                    return Err(FixtureError::ParameterConstraintViolation(format!(
                        "unknown parameter `{other}`"
                    )))
                }
            }
        }
        if !p2_given {
            params.p2 = rat_one() - &params.p1;
        }
        if params.p1 <= rat_zero() || params.p1 >= rat_one() {
            return Err(FixtureError::ParameterConstraintViolation(format!(
                "p1 = {} is not in (0, 1)",
                format_rat(&params.p1)
            )));
        }
        if &params.p1 + &params.p2 != rat_one() {
            return Err(FixtureError::ParameterConstraintViolation(format!(
                "p1 + p2 = {} but must be 1",
                format_rat(&(&params.p1 + &params.p2))
            )));
        }
        Ok(params)
    }
}

/// Textfmt source of a fixture with parameters substituted.
pub fn source(name: &str, params: &Params) -> Result<String, FixtureError> {
    let p1 = format_rat(&params.p1);
    let p2 = format_rat(&params.p2);
    let text = match name {
        "fig1a" => "nplts fig1a\n\
             alphabet a b1 b2 b3 b4\n\
             trans s1 a { u1:1/2 u2:1/2 }\n\
             trans s1 a { u3:1/2 u4:1/2 }\n\
             trans u1 b1 { l1:1 }\n\
             trans u2 b2 { l2:1 }\n\
             trans u3 b3 { l3:1 }\n\
             trans u4 b4 { l4:1 }\n"
            .to_string(),
        "fig1b" => "nplts fig1b\n\
             alphabet a b1 b2 b3 b4\n\
             trans s2 a { t1:1/2 t2:1/2 }\n\
             trans t1 b1 { l1:1 }\n\
             trans t1 b2 { l2:1 }\n\
             trans t2 b3 { l3:1 }\n\
             trans t2 b4 { l4:1 }\n"
            .to_string(),
        "fig3" => "nplts fig3\n\
             alphabet a b1 b2 b3 b4\n\
             trans s1 a { u1:1/2 u2:1/2 }\n\
             trans s1 a { u3:1/2 u4:1/2 }\n\
             trans u1 b1 { l1:1 }\n\
             trans u2 b2 { l2:1 }\n\
             trans u3 b3 { l3:1 }\n\
             trans u4 b4 { l4:1 }\n\
             trans s2 a { v1:1/2 v2:1/2 }\n\
             trans s2 a { v3:1/2 v4:1/2 }\n\
             trans v1 b1 { m1:1 }\n\
             trans v2 b3 { m2:1 }\n\
             trans v3 b2 { m3:1 }\n\
             trans v4 b4 { m4:1 }\n"
            .to_string(),
        "fig4" => "nplts fig4\n\
             alphabet a b c\n\
             trans s1 a { x1:1 }\n\
             trans s1 a { x2:1/2 x3:1/2 }\n\
             trans s1 a { x4:1 }\n\
             trans x1 b { l1:1 }\n\
             trans x2 b { l2:1 }\n\
             trans x3 c { l3:1 }\n\
             trans x4 c { l4:1 }\n\
             trans s2 a { y1:1 }\n\
             trans s2 a { y2:1 }\n\
             trans y1 b { m1:1 }\n\
             trans y2 c { m2:1 }\n"
            .to_string(),
        "fig5_test" => "test fig5_test\n\
             alphabet a b c\n\
             success w\n\
             trans o a { p:1/2 q:1/2 }\n\
             trans p b { w:1 }\n\
             trans q c { l:1 }\n"
            .to_string(),
        "fig6" => "nplts fig6\n\
             alphabet a b c\n\
             trans s1 a { m:1 }\n\
             trans m b { l1:1 }\n\
             trans m c { l2:1 }\n\
             trans s2 a { n1:1 }\n\
             trans s2 a { n2:1 }\n\
             trans n1 b { k1:1 }\n\
             trans n2 c { k2:1 }\n"
            .to_string(),
        "fig6_test" => format!(
            "test fig6_test\n\
             alphabet a b c\n\
             success w\n\
             trans o a {{ t1:{p1} t2:{p2} }}\n\
             trans t1 b {{ w:1 }}\n\
             trans t2 c {{ w:1 }}\n"
        ),
        "fig7" => "nplts fig7\n\
             alphabet a b c d\n\
             trans s1 a { c0:1 }\n\
             trans c0 b { d1:1 }\n\
             trans c0 b { d2:1 }\n\
             trans d1 c { l1:1 }\n\
             trans d2 d { l2:1 }\n\
             trans s2 a { e1:1 }\n\
             trans s2 a { e2:1 }\n\
             trans e1 b { f1:1 }\n\
             trans e2 b { f2:1 }\n\
             trans f1 c { m1:1 }\n\
             trans f2 d { m2:1 }\n"
            .to_string(),
        "fig7_test" => format!(
            "test fig7_test\n\
             alphabet a b c d\n\
             success w\n\
             trans o a {{ o1:{p1} o2:{p2} }}\n\
             trans o1 b {{ o3:1 }}\n\
             trans o2 b {{ o4:1 }}\n\
             trans o3 c {{ w:1 }}\n\
             trans o4 d {{ w:1 }}\n"
        ),
        "fig9" => format!(
            "nplts fig9\n\
             alphabet a b c d\n\
             trans s1 a {{ w1:{p1} w2:{p2} }}\n\
             trans w1 b {{ x1:1 }}\n\
             trans w2 b {{ x2:1 }}\n\
             trans x1 c {{ l1:1 }}\n\
             trans x2 d {{ l2:1 }}\n\
             trans s2 a {{ v0:1 }}\n\
             trans v0 b {{ y1:{p1} y2:{p2} }}\n\
             trans y1 c {{ m1:1 }}\n\
             trans y2 d {{ m2:1 }}\n"
        ),
        "fig9_test" => "test fig9_test\n\
             alphabet a b c d\n\
             success w\n\
             trans o a { o1:1 }\n\
             trans o1 b { o2:1 }\n\
             trans o1 b { o3:1 }\n\
             trans o2 c { w:1 }\n\
             trans o3 d { w:1 }\n"
            .to_string(),
        "fig11" => "nplts fig11\n\
             alphabet a b1 b2 b3 b4\n\
             trans s1 a { g1:1 }\n\
             trans s1 a { g2:1 }\n\
             trans g1 b1 { l1:1 }\n\
             trans g1 b2 { l2:1 }\n\
             trans g2 b3 { l3:1 }\n\
             trans g2 b4 { l4:1 }\n\
             trans s2 a { h1:1 }\n\
             trans s2 a { h2:1 }\n\
             trans h1 b1 { m1:1 }\n\
             trans h1 b3 { m2:1 }\n\
             trans h2 b2 { m3:1 }\n\
             trans h2 b4 { m4:1 }\n"
            .to_string(),
        "fig11_test" => "test fig11_test\n\
             alphabet a b1 b2\n\
             success w\n\
             trans o a { o1:1 }\n\
             trans o1 b1 { w:1 }\n\
             trans o1 b2 { w:1 }\n"
            .to_string(),
        "fig13" => "nplts fig13\n\
             alphabet a b c d\n\
             trans s1 a { x1:2/5 x2:3/5 }\n\
             trans s1 a { x3:3/5 x4:2/5 }\n\
             trans s1 a { x5:3/5 x6:2/5 }\n\
             trans x1 b { l1:1 }\n\
             trans x2 d { l2:1 }\n\
             trans x3 b { l3:1 }\n\
             trans x4 c { l4:1 }\n\
             trans x5 c { l5:1 }\n\
             trans x6 d { l6:1 }\n\
             trans s2 a { y1:3/5 y2:2/5 }\n\
             trans s2 a { y3:2/5 y4:3/5 }\n\
             trans s2 a { y5:2/5 y6:3/5 }\n\
             trans y1 b { m1:1 }\n\
             trans y2 d { m2:1 }\n\
             trans y3 b { m3:1 }\n\
             trans y4 c { m4:1 }\n\
             trans y5 c { m5:1 }\n\
             trans y6 d { m6:1 }\n"
            .to_string(),
        "fig14" => format!(
            "nplts fig14\n\
             alphabet a b c\n\
             trans s1 a {{ q0:1 }}\n\
             trans q0 b {{ l1:1 }}\n\
             trans q0 c {{ l2:1 }}\n\
             trans s2 a {{ r1:{p1} r2:{p2} }}\n\
             trans r1 b {{ m1:1 }}\n\
             trans r1 c {{ m2:1 }}\n\
             trans r2 b {{ m3:1 }}\n\
             trans r2 c {{ m4:1 }}\n"
        ),
        "fig14_test" => "test fig14_test\n\
             alphabet a b c\n\
             success w\n\
             trans o a { o1:1 }\n\
             trans o1 b { w:1 }\n\
             trans o1 c { l:1 }\n"
            .to_string(),
        other => return Err(FixtureError::UnknownFixture(other.to_string())),
    };
    Ok(text)
}

pub fn load_model(name: &str) -> Result<Nplts, FixtureError> {
    load_model_with(name, &Params::default())
}

pub fn load_model_with(name: &str, params: &Params) -> Result<Nplts, FixtureError> {
    if !MODEL_NAMES.contains(&name) {
        return Err(FixtureError::UnknownFixture(name.to_string()));
    }
    let doc = textfmt::parse(&source(name, params)?)?;
    Ok(doc.model)
}

pub fn load_test(name: &str) -> Result<Npt, FixtureError> {
    load_test_with(name, &Params::default())
}

pub fn load_test_with(name: &str, params: &Params) -> Result<Npt, FixtureError> {
    if !TEST_NAMES.contains(&name) {
        return Err(FixtureError::UnknownFixture(name.to_string()));
    }
    let doc = textfmt::parse(&source(name, params)?)?;
    Ok(Npt::from_document(&doc)?)
}

/// The test drawn next to a pair figure, when there is one.
pub fn companion_test(model_name: &str) -> Option<&'static str> {
    match model_name {
        "fig4" => Some("fig5_test"),
        "fig6" => Some("fig6_test"),
        "fig7" => Some("fig7_test"),
        "fig9" => Some("fig9_test"),
        "fig11" => Some("fig11_test"),
        "fig14" => Some("fig14_test"),
        _ => None,
    }
}

/// Pair figures compared between their `s1` and `s2` states.
pub const PAIR_NAMES: &[&str] = &["fig3", "fig4", "fig6", "fig7", "fig9", "fig11", "fig13", "fig14"];
