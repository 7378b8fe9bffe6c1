//! Factor model files: one JSON header line, then CSV records tagged by block.
//!
//! ```text
//! {"format":"helprank-factors","version":1,"kind":"plain",...}
//! user,<user id>,<bias or empty>,<f1>,...,<fK>
//! item,<item id>,<bias or empty>,<f1>,...,<fK>
//! implicit,<item id>,<y1>,...,<yK>
//! rated,<user id>,<item id>
//! ```

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::mf::{FactorKind, FactorModel, MfParams};
use super::RecommendError;

const FORMAT: &str = "helprank-factors";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    kind: FactorKind,
    params: MfParams,
    users: usize,
    items: usize,
    global_mean: f64,
    loss_history: Vec<f64>,
}

pub fn write_model<W: Write>(m: &FactorModel, mut writer: W) -> Result<(), RecommendError> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        kind: m.kind,
        params: m.params,
        users: m.users.len(),
        items: m.items.len(),
        global_mean: m.global_mean,
        loss_history: m.loss_history.clone(),
    };
    let json = serde_json::to_string(&header).map_err(|e| RecommendError::ModelFormat {
        line: 1,
        reason: e.to_string(),
    })?;
    writeln!(writer, "{json}")?;
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    let biased = m.kind != FactorKind::Plain;
    let block = |tag: &str, id: &str, bias: Option<f64>, v: &[f64]| -> Vec<String> {
        let mut rec = vec![tag.to_string(), id.to_string()];
        if let Some(b) = bias {
            rec.push(b.to_string());
        } else if tag != "implicit" {
            rec.push(String::new());
        }
        rec.extend(v.iter().map(f64::to_string));
        rec
    };
    for (p, u) in m.users.iter().enumerate() {
        let bias = biased.then(|| m.user_bias[p]);
        w.write_record(block("user", u, bias, &m.user_factors[p]))?;
    }
    for (p, i) in m.items.iter().enumerate() {
        let bias = biased.then(|| m.item_bias[p]);
        w.write_record(block("item", i, bias, &m.item_factors[p]))?;
    }
    for (p, i) in m
        .items
        .iter()
        .enumerate()
        .filter(|_| !m.implicit.is_empty())
    {
        w.write_record(block("implicit", i, None, &m.implicit[p]))?;
    }
    for (u, rated) in m.rated.iter().enumerate() {
        for &i in rated {
            w.write_record([&"rated".to_string(), &m.users[u], &m.items[i]])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64, RecommendError> {
    let v: f64 = s.trim().parse().map_err(|_| RecommendError::ModelFormat {
        line,
        reason: format!("{s:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(RecommendError::ModelFormat {
            line,
            reason: "non-finite value".into(),
        });
    }
    Ok(v)
}

pub fn read_model<R: Read>(reader: R) -> Result<FactorModel, RecommendError> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let bad = |line: usize, reason: String| RecommendError::ModelFormat { line, reason };
    let header: Header = serde_json::from_str(first.trim()).map_err(|e| bad(1, e.to_string()))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(bad(
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    header
        .params
        .validate()
        .map_err(|e| bad(1, e.to_string()))?;
    if !header.global_mean.is_finite() {
        return Err(bad(1, "non-finite global mean".into()));
    }
    let k = header.params.k;
    let biased = header.kind != FactorKind::Plain;
    let svdpp = header.kind == FactorKind::SvdPlusPlus;

    let mut users = Vec::new();
    let mut items = Vec::new();
    let (mut uf, mut itf, mut ub, mut ib) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut implicit: HashMap<String, Vec<f64>> = HashMap::new();
    let mut rated_pairs = Vec::new();

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize + 1);
        let tag = rec.get(0).unwrap_or_default();
        let want = match tag {
            "user" | "item" => k + 3,
            "implicit" => k + 2,
            "rated" => 3,
            other => return Err(bad(line, format!("unknown record type {other:?}"))),
        };
        if rec.len() != want {
            return Err(bad(
                line,
                format!("{tag} record has {} fields, expected {want}", rec.len()),
            ));
        }
        let id = rec[1].to_string();
        match tag {
            "user" | "item" => {
                let bias = if biased {
                    parse_f64(&rec[2], line)?
                } else if rec[2].is_empty() {
                    0.0
                } else {
                    return Err(bad(line, "bias given for a plain model".into()));
                };
                let v = (3..rec.len())
                    .map(|f| parse_f64(&rec[f], line))
                    .collect::<Result<Vec<_>, _>>()?;
                if tag == "user" {
                    users.push(id);
                    uf.push(v);
                    ub.push(bias);
                } else {
                    items.push(id);
                    itf.push(v);
                    ib.push(bias);
                }
            }
            "implicit" => {
                if !svdpp {
                    return Err(bad(line, "implicit factors in a non-SVD++ model".into()));
                }
                let v = (2..rec.len())
                    .map(|f| parse_f64(&rec[f], line))
                    .collect::<Result<Vec<_>, _>>()?;
                if implicit.insert(id, v).is_some() {
                    return Err(bad(line, "repeated implicit record".into()));
                }
            }
            _ => {
                if !svdpp {
                    return Err(bad(line, "rated pairs in a non-SVD++ model".into()));
                }
                rated_pairs.push((line, id, rec[2].to_string()));
            }
        }
    }
    if users.len() != header.users || items.len() != header.items {
        return Err(bad(
            0,
            format!(
                "header promises {} users and {} items, found {} and {}",
                header.users,
                header.items,
                users.len(),
                items.len()
            ),
        ));
    }
    let unique = |v: &[String]| v.iter().collect::<HashSet<_>>().len() == v.len();
    if !unique(&users) || !unique(&items) {
        return Err(bad(0, "repeated user or item id".into()));
    }
    let ui: HashMap<&str, usize> = users
        .iter()
        .enumerate()
        .map(|(p, u)| (u.as_str(), p))
        .collect();
    let ii: HashMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(p, i)| (i.as_str(), p))
        .collect();
    let mut rated = if svdpp {
        vec![Vec::new(); users.len()]
    } else {
        Vec::new()
    };
    for (line, u, i) in &rated_pairs {
        let (Some(&u), Some(&i)) = (ui.get(u.as_str()), ii.get(i.as_str())) else {
            return Err(bad(
                *line,
                "rated pair names an unknown user or item".into(),
            ));
        };
        rated[u].push(i);
    }
    let implicit = if svdpp {
        items
            .iter()
            .map(|i| {
                implicit
                    .remove(i)
                    .ok_or_else(|| bad(0, format!("no implicit factors for item {i:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let mut m = FactorModel {
        kind: header.kind,
        params: header.params,
        users,
        items,
        user_factors: uf,
        item_factors: itf,
        global_mean: header.global_mean,
        user_bias: if biased { ub } else { Vec::new() },
        item_bias: if biased { ib } else { Vec::new() },
        implicit,
        rated,
        loss_history: header.loss_history,
        ..Default::default()
    };
    m.reindex();
    Ok(m)
}
