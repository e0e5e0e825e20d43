//! The four standard symbols and their displayed time operators.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::Result;
use crate::expr::SpectralSymbol;
use crate::timeop::ClosedForm;

/// A named symbol with parameters, the displayed form of its time operator
/// and the singular set quoted alongside that display.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub symbol: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub closed_form: ClosedForm,
    /// Singular set as customarily stated alongside the displayed operator.
    pub stated_z: &'static str,
}

impl Preset {
    pub fn params(&self) -> BTreeMap<String, f64> {
        self.params.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// Parses the symbol on `window` and returns it with `Z ∩ window`.
    pub fn analyse(&self, window: (f64, f64), resolution: f64) -> Result<(SpectralSymbol, Vec<f64>)> {
        let sym = SpectralSymbol::parse(self.symbol, &self.params(), window, resolution)?.into_validated()?;
        let z = sym.singular_points()?;
        Ok((sym, z))
    }
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "polynomial",
        symbol: "x^2/2",
        params: &[],
        closed_form: ClosedForm::AharonovBohm,
        stated_z: "{λ : g'(λ) = 0} = {0}",
    },
    Preset {
        name: "log_abs",
        symbol: "log(abs(x))",
        params: &[],
        closed_form: ClosedForm::LogAbs,
        stated_z: "{0}",
    },
    Preset {
        name: "semirelativistic",
        symbol: "sqrt(x^2 + m^2)",
        params: &[("m", 1.0)],
        closed_form: ClosedForm::SemiRelativistic { m: 1.0 },
        stated_z: "∅ (m > 0)",
    },
    Preset {
        name: "fractional",
        symbol: "(x^2 + m^2)^(alpha/2)",
        params: &[("alpha", 0.6), ("m", 1.0)],
        closed_form: ClosedForm::Fractional { alpha: 0.6, m: 1.0 },
        stated_z: "not stated",
    },
];

/// Looks up a preset by name; `aharonov_bohm` is accepted for `polynomial`.
pub fn find_preset(name: &str) -> Option<&'static Preset> {
    let name = if name == "aharonov_bohm" { "polynomial" } else { name };
    PRESETS.iter().find(|p| p.name == name)
}

/// Closed forms addressable by name from configuration files.
pub fn closed_form_by_name(name: &str, params: &BTreeMap<String, f64>) -> Option<ClosedForm> {
    let m = params.get("m").copied().unwrap_or(1.0);
    let alpha = params.get("alpha").copied().unwrap_or(0.6);
    match name {
        "position" => Some(ClosedForm::Position),
        "aharonov_bohm" | "polynomial" => Some(ClosedForm::AharonovBohm),
        "log_abs" => Some(ClosedForm::LogAbs),
        "semirelativistic" => Some(ClosedForm::SemiRelativistic { m }),
        "fractional" => Some(ClosedForm::Fractional { alpha, m }),
        _ => None,
    }
}

fn format_set(points: &[f64]) -> String {
    if points.is_empty() {
        "∅".into()
    } else {
        let inner: Vec<String> = points.iter().map(|p| format!("{p}")).collect();
        format!("{{{}}}", inner.join(", "))
    }
}

/// The preset table printed by `list-presets`. `Z` is computed on
/// `[-10, 10]` and shown next to the customary statement; the two differ
/// for the semi-relativistic symbol, whose derivative `λ/√(λ²+m²)` vanishes
/// at the origin.
pub fn preset_table() -> Result<String> {
    let mut out = String::new();
    for p in &PRESETS {
        let (sym, z) = p.analyse((-10.0, 10.0), 0.01)?;
        let params: Vec<String> = p.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "{}", p.name).unwrap();
        writeln!(out, "  g          = {}", sym.g()).unwrap();
        if !params.is_empty() {
            writeln!(out, "  parameters   {}", params.join(", ")).unwrap();
        }
        writeln!(out, "  g'         = {}", sym.gprime()).unwrap();
        writeln!(out, "  Z (stated) = {}", p.stated_z).unwrap();
        writeln!(out, "  Z (computed on [-10, 10]) = {}", format_set(&z)).unwrap();
        writeln!(out, "  D          = {}", p.closed_form.display()).unwrap();
        writeln!(out).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lists_all_presets() {
        let table = preset_table().unwrap();
        for p in &PRESETS {
            assert!(table.contains(p.name));
        }
        assert!(table.contains("½(PQ + QP)"));
        assert!(table.contains("log(abs(x))"));
    }

    #[test]
    fn computed_singular_sets() {
        for p in &PRESETS {
            let (_, z) = p.analyse((-10.0, 10.0), 0.01).unwrap();
            assert_eq!(z, vec![0.0], "{}", p.name);
        }
    }

    #[test]
    fn lookups() {
        assert_eq!(find_preset("aharonov_bohm").unwrap().name, "polynomial");
        assert!(find_preset("nope").is_none());
        let params = [("m".to_string(), 2.0)].into_iter().collect();
        assert_eq!(
            closed_form_by_name("semirelativistic", &params),
            Some(ClosedForm::SemiRelativistic { m: 2.0 })
        );
        assert_eq!(closed_form_by_name("other", &params), None);
    }
}
