//! Vega-Lite specifications for sweep output.
//!
//! Every file written here satisfies [`validate_plot_spec`]: a `$schema`
//! pointing at Vega-Lite v5, `data.url` naming the CSV with
//! `format.type = "csv"`, a `mark`, and `x`/`y` encodings whose `field`
//! is a CSV column or a name introduced by a `calculate`, `fold` or
//! `aggregate` transform, with `type` one of `quantitative`, `ordinal`,
//! `nominal`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::sweep::{read_records_csv, record_columns};
use crate::error::{Error, Result};

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

/// File names written by [`emit_plots`].
pub const PLOT_FILES: [&str; 3] = ["error_vs_rate.vl.json", "sparsity_vs_n.vl.json", "approximation_ratio_vs_eps.vl.json"];

/// Writes the three plot specifications for `csv` into `out_dir`; `d` and
/// `a` define the rate `(d + A log N)/n`. Nothing is written for a CSV
/// without rows.
pub fn emit_plots(csv: &Path, out_dir: &Path, d: usize, a: f64) -> Result<Vec<PathBuf>> {
    let records = read_records_csv(fs::File::open(csv)?)?;
    if records.is_empty() {
        return Err(Error::Malformed(format!("{} has no rows", csv.display())));
    }
    let url = csv.to_string_lossy().into_owned();
    let specs = [error_vs_rate(&url, d, a), sparsity_vs_n(&url), ratio_vs_eps(&url)];
    let columns = record_columns();
    for spec in &specs {
        validate_plot_spec(spec, &columns)?;
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, spec) in PLOT_FILES.iter().zip(&specs) {
        let path = out_dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(spec)? + "\n")?;
        written.push(path);
    }
    Ok(written)
}

fn base(url: &str, title: &str) -> Value {
    json!({
        "$schema": VEGA_LITE_SCHEMA,
        "title": title,
        "data": { "url": url, "format": { "type": "csv" } },
    })
}

fn ok_filter() -> Value {
    json!({ "filter": "datum.status == 'ok'" })
}

fn error_vs_rate(url: &str, d: usize, a: f64) -> Value {
    let mut spec = base(url, "Random error against (d + A log N)/n");
    spec["transform"] = json!([
        ok_filter(),
        { "calculate": format!("({d} + {a} * log(datum.n_atoms)) / datum.n"), "as": "rate" },
        { "calculate": "datum.l2_dist_sq + datum.epsilon * datum.symmetric_kl", "as": "error" },
        { "aggregate": [{ "op": "median", "field": "error", "as": "median_error" }], "groupby": ["scenario", "rate"] },
    ]);
    spec["mark"] = json!({ "type": "line", "point": true });
    spec["encoding"] = json!({
        "x": { "field": "rate", "type": "quantitative", "scale": { "type": "log" } },
        "y": { "field": "median_error", "type": "quantitative", "scale": { "type": "log" } },
        "color": { "field": "scenario", "type": "nominal" },
    });
    spec
}

fn sparsity_vs_n(url: &str) -> Value {
    let mut spec = base(url, "Mass outside the target support");
    spec["transform"] = json!([
        ok_filter(),
        { "fold": ["sparsity_hat", "sparsity_pop"], "as": ["solution", "mass"] },
        { "aggregate": [{ "op": "median", "field": "mass", "as": "median_mass" }], "groupby": ["scenario", "n", "solution"] },
    ]);
    spec["mark"] = json!({ "type": "line", "point": true });
    spec["encoding"] = json!({
        "x": { "field": "n", "type": "quantitative", "scale": { "type": "log" } },
        "y": { "field": "median_mass", "type": "quantitative" },
        "color": { "field": "solution", "type": "nominal" },
        "strokeDash": { "field": "scenario", "type": "nominal" },
    });
    spec
}

fn ratio_vs_eps(url: &str) -> Value {
    let mut spec = base(url, "Approximation error ratio across epsilon");
    spec["transform"] = json!([
        ok_filter(),
        {
            "calculate": "max(0, datum.excess_risk_pop + 2 * datum.epsilon * datum.sparsity_pop) / (datum.epsilon * datum.epsilon * datum.alpha_n * datum.alpha_n + datum.epsilon / datum.n_atoms)",
            "as": "ratio"
        },
        { "aggregate": [{ "op": "median", "field": "ratio", "as": "median_ratio" }], "groupby": ["scenario", "epsilon"] },
    ]);
    spec["mark"] = json!({ "type": "line", "point": true });
    spec["encoding"] = json!({
        "x": { "field": "epsilon", "type": "quantitative", "scale": { "type": "log" } },
        "y": { "field": "median_ratio", "type": "quantitative" },
        "color": { "field": "scenario", "type": "nominal" },
    });
    spec
}

/// Checks a specification against the schema described in the module docs.
pub fn validate_plot_spec(spec: &Value, columns: &[String]) -> Result<()> {
    let bad = |msg: &str| Err(Error::Malformed(format!("plot spec: {msg}")));
    if spec.get("$schema").and_then(Value::as_str) != Some(VEGA_LITE_SCHEMA) {
        return bad("missing or wrong $schema");
    }
    let data = &spec["data"];
    if data["url"].as_str().is_none_or(str::is_empty) || data["format"]["type"].as_str() != Some("csv") {
        return bad("data must reference a csv url");
    }
    match &spec["mark"] {
        Value::String(_) => {}
        Value::Object(m) if m.get("type").is_some_and(Value::is_string) => {}
        _ => return bad("mark must be a string or an object with a type"),
    }
    let mut fields: HashSet<String> = columns.iter().cloned().collect();
    if let Some(transforms) = spec.get("transform") {
        let Some(list) = transforms.as_array() else { return bad("transform must be an array") };
        for t in list {
            if t.get("filter").is_some() {
                continue;
            }
            if t.get("calculate").is_some_and(Value::is_string) {
                match t["as"].as_str() {
                    Some(name) => fields.insert(name.to_owned()),
                    None => return bad("calculate needs an output name"),
                };
            } else if let Some(folded) = t.get("fold").and_then(Value::as_array) {
                if folded.iter().any(|f| !f.as_str().is_some_and(|s| fields.contains(s))) {
                    return bad("fold references an unknown field");
                }
                let Some(names) = t["as"].as_array().filter(|a| a.len() == 2) else {
                    return bad("fold needs two output names");
                };
                fields.extend(names.iter().filter_map(Value::as_str).map(str::to_owned));
            } else if let Some(aggs) = t.get("aggregate").and_then(Value::as_array) {
                let groupby = t["groupby"].as_array().cloned().unwrap_or_default();
                if groupby.iter().any(|g| !g.as_str().is_some_and(|s| fields.contains(s))) {
                    return bad("groupby references an unknown field");
                }
                let mut next: HashSet<String> = groupby.iter().filter_map(Value::as_str).map(str::to_owned).collect();
                for a in aggs {
                    if !a["field"].as_str().is_some_and(|s| fields.contains(s)) || a["op"].as_str().is_none() {
                        return bad("aggregate needs an op and a known field");
                    }
                    match a["as"].as_str() {
                        Some(name) => next.insert(name.to_owned()),
                        None => return bad("aggregate needs an output name"),
                    };
                }
                fields = next;
            } else {
                return bad("unsupported transform");
            }
        }
    }
    let Some(encoding) = spec.get("encoding").and_then(Value::as_object) else { return bad("missing encoding") };
    for channel in ["x", "y"] {
        if !encoding.contains_key(channel) {
            return bad("x and y encodings are required");
        }
    }
    for (channel, enc) in encoding {
        let field = enc["field"].as_str();
        if !field.is_some_and(|f| fields.contains(f)) {
            return bad(&format!("{channel} encodes an unknown field"));
        }
        if !matches!(enc["type"].as_str(), Some("quantitative" | "ordinal" | "nominal")) {
            return bad(&format!("{channel} has an invalid type"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweep::write_records_csv;
    use crate::experiments::verify::planted_records;

    fn write_csv(dir: &Path, rows: usize) -> PathBuf {
        let path = dir.join("runs.csv");
        let records = planted_records(1.0, &[100, 1000], 3, 10);
        write_records_csv(fs::File::create(&path).unwrap(), &records[..rows]).unwrap();
        path
    }

    #[test]
    fn six_rows_give_three_valid_specs() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write_csv(dir.path(), 6);
        let out = dir.path().join("plots");
        let files = emit_plots(&csv, &out, 3, 1.0).unwrap();
        assert_eq!(files.len(), 3);
        for f in &files {
            let spec: Value = serde_json::from_str(&fs::read_to_string(f).unwrap()).unwrap();
            validate_plot_spec(&spec, &record_columns()).unwrap();
            assert_eq!(spec["data"]["url"], csv.to_string_lossy().as_ref());
        }
    }

    #[test]
    fn empty_csv_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write_csv(dir.path(), 0);
        let out = dir.path().join("plots");
        assert!(emit_plots(&csv, &out, 3, 1.0).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn validator_rejects_broken_specs() {
        let cols = record_columns();
        let good = error_vs_rate("runs.csv", 2, 1.0);
        validate_plot_spec(&good, &cols).unwrap();
        let mut no_schema = good.clone();
        no_schema["$schema"] = json!("https://example.org/other.json");
        assert!(validate_plot_spec(&no_schema, &cols).is_err());
        let mut unknown = good.clone();
        unknown["encoding"]["y"]["field"] = json!("error");
        assert!(validate_plot_spec(&unknown, &cols).is_err());
        let mut bad_type = good.clone();
        bad_type["encoding"]["x"]["type"] = json!("number");
        assert!(validate_plot_spec(&bad_type, &cols).is_err());
        let mut no_data = good;
        no_data["data"] = json!({ "values": [] });
        assert!(validate_plot_spec(&no_data, &cols).is_err());
    }
}
