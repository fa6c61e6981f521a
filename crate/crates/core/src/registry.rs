//! Model descriptors: what container to run, how to call its entrypoint, and
//! which optional parameters and variants it has.
//!
//! A descriptor is a TOML file:
//!
//! ```toml
//! name = "gmic"
//! display_name = "GMIC"
//! position = 4
//! container_image = "mammoeval/gmic:latest"
//! granularity = "image"
//! entrypoint_args = ["{IMAGE_DIR}", "{METADATA_PATH}", "{OUTPUT_PATH}", "{DEVICE}", "{model_index}"]
//! default_variant = "top1"
//!
//! [default_params]
//! model_index = "1"
//!
//! [[variants]]
//! name = "top1"
//! column = "GMIC (single)"
//! params = { model_index = "1" }
//! ```
//!
//! Placeholders are `{NAME}`. The built-in names are `IMAGE_DIR`,
//! `METADATA_PATH`, `OUTPUT_PATH` and `DEVICE`; every other placeholder must
//! be a declared parameter (a key of `default_params` or of some variant).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictions::Granularity;
use crate::runner::{Device, ExecutionBackend, CONTAINER_IMAGE_DIR, CONTAINER_METADATA_PATH, CONTAINER_OUTPUT_DIR};

pub const BUILTIN_PLACEHOLDERS: [&str; 4] = ["IMAGE_DIR", "METADATA_PATH", "OUTPUT_PATH", "DEVICE"];

const SHIPPED: [(&str, &str); 5] = [
    ("end2end.toml", include_str!("../registry/end2end.toml")),
    ("faster-rcnn.toml", include_str!("../registry/faster-rcnn.toml")),
    ("dmv-cnn.toml", include_str!("../registry/dmv-cnn.toml")),
    ("gmic.toml", include_str!("../registry/gmic.toml")),
    ("glam.toml", include_str!("../registry/glam.toml")),
];

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("descriptor {source_name}: {message}")]
    Descriptor { source_name: String, message: String },
    #[error("model {0:?} is defined more than once")]
    DuplicateModel(String),
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("model {model:?} has no variant {variant:?}")]
    UnknownVariant { model: String, variant: String },
    #[error("no value for placeholder {{{placeholder}}} of model {model:?}")]
    MissingParam { model: String, placeholder: String },
    #[error("parameter {key:?}: {message}")]
    Param { key: String, message: String },
    #[error("cannot read registry {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Optional model parameters, e.g. `mean_pixel_intensity` or `model_variant`.
pub type ParamBundle = BTreeMap<String, String>;

/// Parses `key=value`.
pub fn parse_param(s: &str) -> Result<(String, String), RegistryError> {
    let (k, v) = s.split_once('=').ok_or_else(|| RegistryError::Param {
        key: s.to_string(),
        message: "expected key=value".into(),
    })?;
    if !is_identifier(k) {
        return Err(RegistryError::Param {
            key: k.to_string(),
            message: "not a valid parameter name".into(),
        });
    }
    Ok((k.to_string(), v.to_string()))
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn check_value(key: &str, value: &str) -> Result<(), RegistryError> {
    let err = |message: String| RegistryError::Param {
        key: key.to_string(),
        message,
    };
    if value.contains(['{', '}']) {
        return Err(err(format!("value {value:?} may not contain braces")));
    }
    if key == "mean_pixel_intensity" {
        let v: f64 = value
            .parse()
            .map_err(|_| err(format!("{value:?} is not a number")))?;
        if !v.is_finite() || !(0.0..=255.0).contains(&v) {
            return Err(err(format!("{v} is outside [0, 255]")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    /// Scoreboard column label; defaults to the model's display name.
    #[serde(default)]
    pub column: Option<String>,
    #[serde(default)]
    pub params: ParamBundle,
    /// Overrides the descriptor's four-view requirement.
    #[serde(default)]
    pub requires_all_four_views: Option<bool>,
    /// Whether the scoreboard shows this variant when it has no results.
    #[serde(default = "yes")]
    pub scoreboard: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub name: String,
    #[serde(default)]
    pub display_name: Option<String>,
    /// Sort key for listing and scoreboard columns; ties break on name.
    #[serde(default)]
    pub position: Option<u32>,
    pub container_image: String,
    /// Executable used by the local-process backend. Relative paths resolve
    /// against the descriptor's directory.
    #[serde(default)]
    pub local_entrypoint: Option<PathBuf>,
    pub granularity: Granularity,
    #[serde(default)]
    pub requires_all_four_views: bool,
    pub entrypoint_args: Vec<String>,
    #[serde(default)]
    pub default_variant: Option<String>,
    #[serde(default)]
    pub default_params: ParamBundle,
    #[serde(default)]
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece<'a> {
    Text(&'a str),
    Placeholder(&'a str),
}

fn tokenize(template: &str) -> Result<Vec<Piece<'_>>, String> {
    let mut pieces = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find(['{', '}']) {
        if rest.as_bytes()[open] == b'}' {
            return Err(format!("unmatched '}}' in {template:?}"));
        }
        if open > 0 {
            pieces.push(Piece::Text(&rest[..open]));
        }
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| format!("unterminated placeholder in {template:?}"))?;
        let name = &after[..close];
        if !is_identifier(name) {
            return Err(format!("malformed placeholder {{{name}}} in {template:?}"));
        }
        pieces.push(Piece::Placeholder(name));
        rest = &after[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest));
    }
    Ok(pieces)
}

impl ModelDescriptor {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, RegistryError> {
        let desc: ModelDescriptor = toml::from_str(text).map_err(|e| RegistryError::Descriptor {
            source_name: source_name.to_string(),
            message: e.message().to_string(),
        })?;
        desc.check().map_err(|message| RegistryError::Descriptor {
            source_name: source_name.to_string(),
            message,
        })?;
        Ok(desc)
    }

    fn check(&self) -> Result<(), String> {
        if self.name.is_empty()
            || !self
                .name
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_')
        {
            return Err(format!("invalid model name {:?}", self.name));
        }
        let image = &self.container_image;
        if image.is_empty() || image.starts_with('-') || image.chars().any(char::is_whitespace) {
            return Err(format!("invalid container image reference {image:?}"));
        }
        let mut names = HashSet::new();
        for v in &self.variants {
            if !is_identifier(&v.name.replace('-', "_")) {
                return Err(format!("invalid variant name {:?}", v.name));
            }
            if !names.insert(v.name.as_str()) {
                return Err(format!("variant {:?} is defined more than once", v.name));
            }
        }
        if let Some(d) = &self.default_variant {
            if !names.contains(d.as_str()) {
                return Err(format!("default_variant {d:?} is not a declared variant"));
            }
        }
        let declared = self.declared_params();
        for arg in &self.entrypoint_args {
            for piece in tokenize(arg)? {
                if let Piece::Placeholder(p) = piece {
                    if !BUILTIN_PLACEHOLDERS.contains(&p) && !declared.contains(p) {
                        return Err(format!("placeholder {{{p}}} is neither built in nor a declared parameter"));
                    }
                }
            }
        }
        let bundles = std::iter::once(&self.default_params).chain(self.variants.iter().map(|v| &v.params));
        for bundle in bundles {
            for (k, v) in bundle {
                if !is_identifier(k) || BUILTIN_PLACEHOLDERS.contains(&k.as_str()) {
                    return Err(format!("invalid parameter name {k:?}"));
                }
                check_value(k, v).map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }

    /// Parameter names declared by defaults or any variant.
    pub fn declared_params(&self) -> BTreeSet<&str> {
        self.default_params
            .keys()
            .chain(self.variants.iter().flat_map(|v| v.params.keys()))
            .map(String::as_str)
            .collect()
    }

    pub fn display_name(&self) -> &str {
        self.display_name.as_deref().unwrap_or(&self.name)
    }

    pub fn variant(&self, name: &str) -> Option<&Variant> {
        self.variants.iter().find(|v| v.name == name)
    }

    /// Scoreboard label for a model/variant pair.
    pub fn column_label(&self, variant: Option<&str>) -> String {
        variant
            .and_then(|v| self.variant(v))
            .and_then(|v| v.column.clone())
            .unwrap_or_else(|| match variant {
                Some(v) if self.variant(v).is_none() => format!("{} ({v})", self.display_name()),
                _ => self.display_name().to_string(),
            })
    }

    pub fn requires_all_four_views(&self, variant: Option<&str>) -> bool {
        variant
            .and_then(|v| self.variant(v))
            .and_then(|v| v.requires_all_four_views)
            .unwrap_or(self.requires_all_four_views)
    }

    fn sort_key(&self) -> (u32, &str) {
        (self.position.unwrap_or(u32::MAX), &self.name)
    }
}

/// Host-side paths handed to a model run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationPaths {
    pub image_dir: PathBuf,
    pub metadata: PathBuf,
    pub output: PathBuf,
}

/// A fully substituted entrypoint call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedInvocation {
    pub model: String,
    pub variant: Option<String>,
    pub container_image: String,
    pub local_entrypoint: Option<PathBuf>,
    pub granularity: Granularity,
    pub device: Device,
    pub backend: ExecutionBackend,
    pub args: Vec<String>,
    pub params: ParamBundle,
    pub paths: InvocationPaths,
}

fn path_str(p: &Path) -> Result<String, RegistryError> {
    let s = p.to_str().ok_or_else(|| RegistryError::Param {
        key: "path".into(),
        message: format!("{} is not valid UTF-8", p.display()),
    })?;
    check_value("path", s)?;
    Ok(s.to_string())
}

/// Substitutes every placeholder in `template`, scanning it once.
fn substitute(template: &str, bindings: &BTreeMap<String, String>, model: &str) -> Result<String, RegistryError> {
    let pieces = tokenize(template).map_err(|message| RegistryError::Descriptor {
        source_name: model.to_string(),
        message,
    })?;
    let mut out = String::new();
    for p in pieces {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Placeholder(name) => out.push_str(bindings.get(name).ok_or_else(|| RegistryError::MissingParam {
                model: model.to_string(),
                placeholder: name.to_string(),
            })?),
        }
    }
    Ok(out)
}

/// Resolves the entrypoint arguments for one run.
///
/// Parameter precedence is `overrides` > variant bundle > `default_params`.
/// When `variant` is `None` the descriptor's default variant applies, if any.
/// With the container backend the path placeholders resolve to the fixed
/// in-container mount points; otherwise to the host paths.
pub fn resolve_invocation(
    desc: &ModelDescriptor,
    variant: Option<&str>,
    overrides: &ParamBundle,
    paths: &InvocationPaths,
    device: Device,
    backend: ExecutionBackend,
) -> Result<ResolvedInvocation, RegistryError> {
    let variant = match variant.or(desc.default_variant.as_deref()) {
        Some(name) => Some(desc.variant(name).ok_or_else(|| RegistryError::UnknownVariant {
            model: desc.name.clone(),
            variant: name.to_string(),
        })?),
        None => None,
    };
    let declared = desc.declared_params();
    for (k, v) in overrides {
        if !declared.contains(k.as_str()) {
            return Err(RegistryError::Param {
                key: k.clone(),
                message: format!("model {:?} declares no such parameter", desc.name),
            });
        }
        check_value(k, v)?;
    }

    let mut params = desc.default_params.clone();
    if let Some(v) = variant {
        params.extend(v.params.clone());
    }
    params.extend(overrides.clone());

    let mut bindings = params.clone();
    let (image_dir, metadata, output) = match backend {
        ExecutionBackend::Container => {
            let file = paths
                .output
                .file_name()
                .and_then(|f| f.to_str())
                .ok_or_else(|| RegistryError::Param {
                    key: "output".into(),
                    message: format!("{} has no UTF-8 file name", paths.output.display()),
                })?;
            check_value("output", file)?;
            (
                CONTAINER_IMAGE_DIR.to_string(),
                CONTAINER_METADATA_PATH.to_string(),
                format!("{CONTAINER_OUTPUT_DIR}/{file}"),
            )
        }
        ExecutionBackend::LocalProcess => (
            path_str(&paths.image_dir)?,
            path_str(&paths.metadata)?,
            path_str(&paths.output)?,
        ),
    };
    bindings.insert("IMAGE_DIR".into(), image_dir);
    bindings.insert("METADATA_PATH".into(), metadata);
    bindings.insert("OUTPUT_PATH".into(), output);
    bindings.insert("DEVICE".into(), device.as_str().into());

    let args = desc
        .entrypoint_args
        .iter()
        .map(|a| substitute(a, &bindings, &desc.name))
        .collect::<Result<_, _>>()?;
    Ok(ResolvedInvocation {
        model: desc.name.clone(),
        variant: variant.map(|v| v.name.clone()),
        container_image: desc.container_image.clone(),
        local_entrypoint: desc.local_entrypoint.clone(),
        granularity: desc.granularity,
        device,
        backend,
        args,
        params,
        paths: paths.clone(),
    })
}

impl ResolvedInvocation {
    /// Runs placeholder substitution over the already resolved arguments.
    /// Resolved arguments contain no placeholders, so this is the identity.
    pub fn resolve_again(&self) -> Result<Vec<String>, RegistryError> {
        let bindings = BTreeMap::new();
        self.args
            .iter()
            .map(|a| substitute(a, &bindings, &self.model))
            .collect()
    }
}

/// Loaded descriptors, sorted by `(position, name)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    models: Vec<ModelDescriptor>,
}

impl Registry {
    pub fn from_descriptors(mut models: Vec<ModelDescriptor>) -> Result<Self, RegistryError> {
        models.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let mut seen = HashSet::new();
        for m in &models {
            if !seen.insert(&m.name) {
                return Err(RegistryError::DuplicateModel(m.name.clone()));
            }
        }
        Ok(Registry { models })
    }

    pub fn models(&self) -> &[ModelDescriptor] {
        &self.models
    }

    pub fn get(&self, name: &str) -> Result<&ModelDescriptor, RegistryError> {
        self.models
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| RegistryError::UnknownModel(name.to_string()))
    }

    /// The five models shipped with the harness.
    pub fn shipped() -> Self {
        let models = SHIPPED
            .iter()
            .map(|(name, text)| ModelDescriptor::parse(text, name))
            .collect::<Result<Vec<_>, _>>()
            .expect("shipped descriptors are valid");
        Registry::from_descriptors(models).expect("shipped descriptors have unique names")
    }
}

/// Loads every `*.toml` file in `dir`. Relative `local_entrypoint` paths are
/// made absolute against `dir`.
pub fn load_registry(dir: &Path) -> Result<Registry, RegistryError> {
    let io = |source| RegistryError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut models = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") || !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|source| RegistryError::Io {
            path: path.clone(),
            source,
        })?;
        let mut desc = ModelDescriptor::parse(&text, &path.display().to_string())?;
        if let Some(ep) = &desc.local_entrypoint {
            if ep.is_relative() {
                desc.local_entrypoint = Some(dir.join(ep));
            }
        }
        models.push(desc);
    }
    Registry::from_descriptors(models)
}

impl fmt::Display for ModelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}, {}-level, image {})",
            self.name,
            self.display_name(),
            self.granularity,
            self.container_image
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "plain"
container_image = "example/plain:1"
granularity = "breast"
entrypoint_args = ["{IMAGE_DIR}", "{METADATA_PATH}", "{OUTPUT_PATH}", "{DEVICE}"]
"#;

    fn paths() -> InvocationPaths {
        InvocationPaths {
            image_dir: "/data/img".into(),
            metadata: "/data/meta.json".into(),
            output: "/out/preds.csv".into(),
        }
    }

    fn local(desc: &ModelDescriptor, variant: Option<&str>, overrides: &ParamBundle) -> Result<ResolvedInvocation, RegistryError> {
        resolve_invocation(desc, variant, overrides, &paths(), Device::Cpu, ExecutionBackend::LocalProcess)
    }

    #[test]
    fn shipped_registry_has_five_models() {
        let reg = Registry::shipped();
        let names: Vec<_> = reg.models().iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["end2end", "faster-rcnn", "dmv-cnn", "gmic", "glam"]);
        let variants = |m: &str| -> Vec<String> {
            reg.get(m).unwrap().variants.iter().map(|v| v.name.clone()).collect()
        };
        assert_eq!(variants("end2end"), ["ddsm-resnet50", "inbreast-vgg16"]);
        assert!(variants("faster-rcnn").is_empty());
        assert!(reg.get("faster-rcnn").unwrap().default_params.is_empty());
        assert_eq!(variants("dmv-cnn"), ["nyu_model", "nyu_model_single"]);
        assert_eq!(variants("gmic"), ["top1", "top5-ensemble"]);
        assert_eq!(variants("glam"), ["model_joint", "model_sep"]);
        assert_eq!(
            reg.get("end2end").unwrap().default_params["mean_pixel_intensity"],
            "44.4"
        );
        assert_eq!(reg.get("glam").unwrap().default_variant.as_deref(), Some("model_joint"));
    }

    #[test]
    fn plain_descriptor_resolves_paths_and_device() {
        let d = ModelDescriptor::parse(MINIMAL, "t").unwrap();
        let inv = local(&d, None, &ParamBundle::new()).unwrap();
        assert_eq!(inv.args, ["/data/img", "/data/meta.json", "/out/preds.csv", "cpu"]);
        assert_eq!(inv.resolve_again().unwrap(), inv.args);
    }

    #[test]
    fn container_backend_uses_mount_points() {
        let d = ModelDescriptor::parse(MINIMAL, "t").unwrap();
        let inv = resolve_invocation(&d, None, &ParamBundle::new(), &paths(), Device::Gpu, ExecutionBackend::Container).unwrap();
        assert_eq!(
            inv.args,
            [
                CONTAINER_IMAGE_DIR.to_string(),
                CONTAINER_METADATA_PATH.to_string(),
                format!("{CONTAINER_OUTPUT_DIR}/preds.csv"),
                "gpu".to_string()
            ]
        );
    }

    #[test]
    fn undeclared_placeholder_is_rejected() {
        let text = MINIMAL.replace("\"{DEVICE}\"", "\"{DEVICE}\", \"{GPU_COUNT}\"");
        assert!(matches!(
            ModelDescriptor::parse(&text, "t"),
            Err(RegistryError::Descriptor { .. })
        ));
        for bad in ["\"{IMAGE_DIR\"", "\"x}\"", "\"{a b}\""] {
            let text = MINIMAL.replace("\"{DEVICE}\"", bad);
            assert!(ModelDescriptor::parse(&text, "t").is_err(), "{bad}");
        }
    }

    #[test]
    fn unknown_descriptor_keys_rejected() {
        let text = format!("{MINIMAL}\ncolour = \"red\"\n");
        assert!(ModelDescriptor::parse(&text, "t").is_err());
    }

    #[test]
    fn end2end_override_lands_in_args() {
        let reg = Registry::shipped();
        let d = reg.get("end2end").unwrap();
        let overrides = ParamBundle::from([("mean_pixel_intensity".to_string(), "52.18".to_string())]);
        let inv = local(d, Some("ddsm-resnet50"), &overrides).unwrap();
        assert!(inv.args.iter().any(|a| a == "52.18"), "{:?}", inv.args);
        let default = local(d, Some("ddsm-resnet50"), &ParamBundle::new()).unwrap();
        assert!(default.args.iter().any(|a| a == "44.4"));
    }

    #[test]
    fn gmic_variants_differ_only_in_model_choice() {
        let reg = Registry::shipped();
        let d = reg.get("gmic").unwrap();
        let top1 = local(d, Some("top1"), &ParamBundle::new()).unwrap();
        let top5 = local(d, Some("top5-ensemble"), &ParamBundle::new()).unwrap();
        assert_ne!(top1.args, top5.args);
        let diffs: Vec<_> = top1
            .args
            .iter()
            .zip(&top5.args)
            .filter(|(a, b)| a != b)
            .collect();
        assert_eq!(diffs.len(), 1);
    }

    #[test]
    fn precedence_override_beats_variant_beats_default() {
        let text = r#"
name = "p"
container_image = "x/p"
granularity = "image"
entrypoint_args = ["{k}"]
default_variant = "v"
[default_params]
k = "default"
[[variants]]
name = "v"
params = { k = "variant" }
[[variants]]
name = "w"
"#;
        let d = ModelDescriptor::parse(text, "t").unwrap();
        assert_eq!(local(&d, None, &ParamBundle::new()).unwrap().args, ["variant"]);
        assert_eq!(local(&d, Some("w"), &ParamBundle::new()).unwrap().args, ["default"]);
        let o = ParamBundle::from([("k".to_string(), "override".to_string())]);
        assert_eq!(local(&d, None, &o).unwrap().args, ["override"]);
    }

    #[test]
    fn missing_param_and_unknown_variant() {
        let text = r#"
name = "p"
container_image = "x/p"
granularity = "image"
entrypoint_args = ["{only_in_a}"]
[[variants]]
name = "a"
params = { only_in_a = "1" }
[[variants]]
name = "b"
"#;
        let d = ModelDescriptor::parse(text, "t").unwrap();
        assert!(matches!(
            local(&d, Some("b"), &ParamBundle::new()),
            Err(RegistryError::MissingParam { .. })
        ));
        assert!(matches!(
            local(&d, Some("zzz"), &ParamBundle::new()),
            Err(RegistryError::UnknownVariant { .. })
        ));
        let undeclared = ParamBundle::from([("nope".to_string(), "1".to_string())]);
        assert!(matches!(
            local(&d, Some("a"), &undeclared),
            Err(RegistryError::Param { .. })
        ));
    }

    #[test]
    fn mean_intensity_range_checked() {
        let d = Registry::shipped().get("end2end").unwrap().clone();
        for bad in ["300", "-1", "abc", "NaN"] {
            let o = ParamBundle::from([("mean_pixel_intensity".to_string(), bad.to_string())]);
            assert!(local(&d, None, &o).is_err(), "{bad}");
        }
    }

    #[test]
    fn duplicate_model_names_rejected() {
        let d = ModelDescriptor::parse(MINIMAL, "t").unwrap();
        assert!(matches!(
            Registry::from_descriptors(vec![d.clone(), d]),
            Err(RegistryError::DuplicateModel(_))
        ));
        let dup_variant = format!("{MINIMAL}\n[[variants]]\nname = \"a\"\n[[variants]]\nname = \"a\"\n");
        assert!(ModelDescriptor::parse(&dup_variant, "t").is_err());
    }

    #[test]
    fn load_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_registry(dir.path()).unwrap().models().is_empty());
        std::fs::write(dir.path().join("b.toml"), MINIMAL.replace("plain", "bbb")).unwrap();
        std::fs::write(dir.path().join("a.toml"), MINIMAL.replace("plain", "aaa")).unwrap();
        std::fs::write(dir.path().join("README.md"), "ignored").unwrap();
        let reg = load_registry(dir.path()).unwrap();
        let names: Vec<_> = reg.models().iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["aaa", "bbb"]);
    }

    #[test]
    fn param_syntax() {
        assert_eq!(
            parse_param("mean_pixel_intensity=52.18").unwrap(),
            ("mean_pixel_intensity".to_string(), "52.18".to_string())
        );
        assert!(parse_param("novalue").is_err());
        assert!(parse_param("bad key=1").is_err());
    }

    #[test]
    fn column_labels() {
        let reg = Registry::shipped();
        assert_eq!(reg.get("gmic").unwrap().column_label(Some("top5-ensemble")), "GMIC (top-5 ensemble)");
        assert_eq!(reg.get("faster-rcnn").unwrap().column_label(None), "Faster R-CNN");
        assert_eq!(reg.get("end2end").unwrap().column_label(Some("ddsm-resnet50")), "End2end (DDSM)");
    }
}
