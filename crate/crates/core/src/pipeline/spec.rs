//! SoC specification documents: `SoC_General`, `BUS_INTERFACE`, `IP_<n>`
//! blocks and `Assets`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("spec error at {path}: {message}")]
pub struct SpecError {
    pub path: String,
    pub message: String,
}

fn err(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError { path: path.into(), message: message.into() }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SocGeneral {
    pub name: String,
    pub kind: String,
    pub bus: String,
    pub number_of_ips: Option<usize>,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BusInterface {
    pub interface_name: String,
    pub number_of_ports: Option<usize>,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpBlock {
    /// Key in the document, e.g. `IP_1`.
    pub key: String,
    pub name: String,
    pub kind: String,
    pub operation: String,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub name: String,
    pub kind: String,
    pub extra: BTreeMap<String, Value>,
}

impl Asset {
    /// Model signals carrying the asset (`SIGNALS`, a list or a
    /// comma-separated string). Defaults to the asset name.
    pub fn signals(&self) -> Vec<String> {
        match self.extra.get("SIGNALS") {
            Some(Value::Array(a)) => a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect(),
            Some(Value::String(s)) => s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
            _ => vec![self.name.clone()],
        }
    }

    pub fn owner(&self) -> Option<&str> {
        self.extra.get("OWNER").or_else(|| self.extra.get("IP")).and_then(Value::as_str)
    }

    pub fn threat_model(&self) -> Option<&str> {
        self.extra.get("THREAT_MODEL").and_then(Value::as_str)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub soc_general: Option<SocGeneral>,
    pub bus_interface: Option<BusInterface>,
    pub ip_blocks: Vec<IpBlock>,
    pub assets: Vec<Asset>,
}

/// The slice of a spec relevant to one IP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpView {
    pub soc: Option<SocGeneral>,
    pub bus: Option<BusInterface>,
    pub ip: Option<IpBlock>,
    pub assets: Vec<Asset>,
}

pub fn ingest_spec_file(path: impl AsRef<Path>, strict: bool) -> Result<SpecFile, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| err(path.display().to_string(), e.to_string()))?;
    ingest_spec(&text, strict)
}

/// Parses and validates a spec document. In strict mode `NO_OF_IP` must
/// equal the number of `IP_<n>` blocks.
pub fn ingest_spec(text: &str, strict: bool) -> Result<SpecFile, SpecError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| err("$", e.to_string()))?;
    let obj = doc.as_object().ok_or_else(|| err("$", "expected an object"))?;
    let mut spec = SpecFile::default();
    let mut ip_keys: Vec<(usize, &String)> = Vec::new();
    for (k, v) in obj {
        match k.as_str() {
            "SoC_General" => {
                let mut o = section(v, k)?;
                spec.soc_general = Some(SocGeneral {
                    name: take_str(&mut o, "NAME", k)?,
                    kind: take_str(&mut o, "TYPE", k)?,
                    bus: take_str(&mut o, "BUS", k)?,
                    number_of_ips: take_count(&mut o, "NO_OF_IP", k)?,
                    extra: o.into_iter().collect(),
                });
            }
            "BUS_INTERFACE" => {
                let mut o = section(v, k)?;
                spec.bus_interface = Some(BusInterface {
                    interface_name: take_str(&mut o, "INTERFACE_NAME", k)?,
                    number_of_ports: take_count(&mut o, "NO_OF_PORTS", k)?,
                    extra: o.into_iter().collect(),
                });
            }
            "Assets" => {
                let items: Vec<(String, &Value)> = match v {
                    Value::Array(a) => a.iter().enumerate().map(|(i, x)| (format!("Assets[{i}]"), x)).collect(),
                    Value::Object(_) => vec![(k.clone(), v)],
                    _ => return Err(err(k, "expected an object or an array of objects")),
                };
                for (path, item) in items {
                    let mut o = section(item, &path)?;
                    spec.assets.push(Asset {
                        name: take_str(&mut o, "NAME", &path)?,
                        kind: take_str(&mut o, "TYPE", &path)?,
                        extra: o.into_iter().collect(),
                    });
                }
            }
            _ => {
                let n = k.strip_prefix("IP_").and_then(|n| n.parse::<usize>().ok());
                match n {
                    Some(n) => ip_keys.push((n, k)),
                    None => return Err(err(k, "unknown section")),
                }
            }
        }
    }
    ip_keys.sort();
    for (_, k) in ip_keys {
        let mut o = section(&obj[k.as_str()], k)?;
        spec.ip_blocks.push(IpBlock {
            key: k.clone(),
            name: take_str(&mut o, "NAME", k)?,
            kind: take_str(&mut o, "TYPE", k)?,
            operation: take_str(&mut o, "OPERATION", k)?,
            extra: o.into_iter().collect(),
        });
    }
    if strict {
        if let Some(n) = spec.soc_general.as_ref().and_then(|s| s.number_of_ips) {
            if n != spec.ip_blocks.len() {
                return Err(err(
                    "SoC_General.NO_OF_IP",
                    format!("declares {n} IPs but {} IP blocks are present", spec.ip_blocks.len()),
                ));
            }
        }
    }
    for (i, a) in spec.assets.iter().enumerate() {
        if let Some(owner) = a.owner() {
            if !spec.ip_blocks.iter().any(|ip| ip.name == owner || ip.key == owner) {
                return Err(err(format!("Assets[{i}].OWNER"), format!("references undeclared IP '{owner}'")));
            }
        }
    }
    Ok(spec)
}

fn section(v: &Value, path: &str) -> Result<Map<String, Value>, SpecError> {
    v.as_object().cloned().ok_or_else(|| err(path, "expected an object"))
}

fn take_str(o: &mut Map<String, Value>, key: &str, path: &str) -> Result<String, SpecError> {
    match o.remove(key) {
        Some(Value::String(s)) => Ok(s),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(_) => Err(err(format!("{path}.{key}"), "expected a string")),
        None => Err(err(format!("{path}.{key}"), "missing field")),
    }
}

fn take_count(o: &mut Map<String, Value>, key: &str, path: &str) -> Result<Option<usize>, SpecError> {
    match o.remove(key) {
        None => Ok(None),
        Some(Value::Number(n)) => n.as_u64().map(|n| Some(n as usize)).ok_or_else(|| err(format!("{path}.{key}"), "expected a count")),
        Some(Value::String(s)) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| err(format!("{path}.{key}"), format!("'{s}' is not a count"))),
        Some(_) => Err(err(format!("{path}.{key}"), "expected a count")),
    }
}

impl SpecFile {
    /// One view per IP block.
    pub fn ip_views(&self) -> Vec<IpView> {
        (0..self.ip_blocks.len()).map(|i| self.view_of(Some(i))).collect()
    }

    /// View for the IP named `name` (case-insensitive), or an SoC-level
    /// view when no IP matches.
    pub fn view(&self, name: Option<&str>) -> IpView {
        let idx = name.and_then(|n| {
            self.ip_blocks
                .iter()
                .position(|ip| ip.name.eq_ignore_ascii_case(n) || ip.key.eq_ignore_ascii_case(n))
        });
        self.view_of(idx)
    }

    fn view_of(&self, idx: Option<usize>) -> IpView {
        let ip = idx.map(|i| self.ip_blocks[i].clone());
        let assets = self
            .assets
            .iter()
            .filter(|a| match (a.owner(), &ip) {
                (Some(o), Some(ip)) => o == ip.name || o == ip.key,
                _ => true,
            })
            .cloned()
            .collect();
        IpView { soc: self.soc_general.clone(), bus: self.bus_interface.clone(), ip, assets }
    }
}

impl IpView {
    pub fn module_name(&self) -> String {
        match (&self.ip, &self.soc) {
            (Some(ip), _) => ip.name.clone(),
            (None, Some(soc)) => soc.name.clone(),
            _ => "design".into(),
        }
    }

    /// Threat-model text attached to the IP or its assets.
    pub fn threat_model(&self) -> Option<String> {
        let mut parts: Vec<String> = Vec::new();
        if let Some(t) = self.ip.as_ref().and_then(|ip| ip.extra.get("THREAT_MODEL")).and_then(Value::as_str) {
            parts.push(t.to_string());
        }
        for a in &self.assets {
            if let Some(t) = a.threat_model() {
                parts.push(format!("{}: {t}", a.name));
            }
        }
        (!parts.is_empty()).then(|| parts.join("\n"))
    }

    /// Plain-text rendering used in prompts. Keys are emitted in sorted
    /// order so the text is stable.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let extra = |out: &mut String, m: &BTreeMap<String, Value>| {
            for (k, v) in m {
                let v = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let _ = writeln!(out, "  {k}: {v}");
            }
        };
        if let Some(s) = &self.soc {
            let _ = writeln!(out, "SoC: {} ({}), bus {}", s.name, s.kind, s.bus);
            if let Some(n) = s.number_of_ips {
                let _ = writeln!(out, "  NO_OF_IP: {n}");
            }
            extra(&mut out, &s.extra);
        }
        if let Some(b) = &self.bus {
            let _ = writeln!(out, "Bus interface: {}", b.interface_name);
            if let Some(n) = b.number_of_ports {
                let _ = writeln!(out, "  NO_OF_PORTS: {n}");
            }
            extra(&mut out, &b.extra);
        }
        if let Some(ip) = &self.ip {
            let _ = writeln!(out, "IP {}: {} ({}), operation {}", ip.key, ip.name, ip.kind, ip.operation);
            extra(&mut out, &ip.extra);
        }
        for a in &self.assets {
            let _ = writeln!(out, "Asset: {} ({})", a.name, a.kind);
            extra(&mut out, &a.extra);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CEP: &str = r#"{
        "SoC_General": {"NAME": "MIT-CEP", "TYPE": "Open-source", "BUS": "AXI4", "NO_OF_IP": "12"},
        "BUS_INTERFACE": {"INTERFACE_NAME": "Master/Slave", "NO_OF_PORTS": "17"},
        "IP_1": {"NAME": "AES", "TYPE": "Slave", "OPERATION": "Crypto"},
        "Assets": {"NAME": "aes_key", "TYPE": "192-bit"}
    }"#;

    #[test]
    fn cep_spec() {
        let s = ingest_spec(CEP, false).unwrap();
        let soc = s.soc_general.as_ref().unwrap();
        assert_eq!(soc.bus, "AXI4");
        assert_eq!(soc.number_of_ips, Some(12));
        assert_eq!(s.assets[0].name, "aes_key");
        assert_eq!(s.assets[0].kind, "192-bit");
        assert_eq!(s.ip_views().len(), 1);
    }

    #[test]
    fn strict_count_mismatch() {
        let e = ingest_spec(CEP, true).unwrap_err();
        assert_eq!(e.path, "SoC_General.NO_OF_IP");
    }

    #[test]
    fn zero_ips() {
        let s = ingest_spec(r#"{"SoC_General": {"NAME": "x", "TYPE": "t", "BUS": "b", "NO_OF_IP": "0"}}"#, true).unwrap();
        assert!(s.ip_views().is_empty());
    }

    #[test]
    fn field_paths_in_errors() {
        let e = ingest_spec(r#"{"IP_2": {"NAME": "A", "TYPE": "t"}}"#, false).unwrap_err();
        assert_eq!(e.path, "IP_2.OPERATION");
        let e = ingest_spec(
            r#"{"IP_1": {"NAME": "A", "TYPE": "t", "OPERATION": "o"}, "Assets": [{"NAME": "k", "TYPE": "t", "OWNER": "B"}]}"#,
            false,
        )
        .unwrap_err();
        assert_eq!(e.path, "Assets[0].OWNER");
    }
}
