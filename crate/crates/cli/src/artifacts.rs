//! Output directory writer. Every artifact carries run metadata: JSON
//! documents embed it, SVG documents carry it in `<metadata>`, CSV and PNG
//! files get a `<name>.meta.json` sidecar.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "figkit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run metadata. Paths are reduced to file names so reruns into another
/// directory stay byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
}

impl Meta {
    pub fn new(command: &'static str, seed: u64, config: Value) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            seed,
            config,
        }
    }
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub struct Artifacts {
    root: PathBuf,
    meta: Meta,
}

impl Artifacts {
    pub fn new(root: &Path, meta: Meta) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            meta,
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(())
    }

    fn meta_value(&self) -> Value {
        serde_json::to_value(&self.meta).expect("metadata serializes")
    }

    fn sidecar(&mut self, rel: &str) -> CliResult<()> {
        let body = pretty(&json!({ "meta": self.meta_value(), "artifact": rel }))?;
        self.write(&format!("{rel}.meta.json"), body.as_bytes())
    }

    /// JSON object with a leading `meta` entry followed by `fields`.
    pub fn json(&mut self, rel: &str, fields: Vec<(&str, Value)>) -> CliResult<()> {
        let mut obj = Map::new();
        obj.insert("meta".into(), self.meta_value());
        for (k, v) in fields {
            obj.insert(k.into(), v);
        }
        let body = pretty(&Value::Object(obj))?;
        self.write(rel, body.as_bytes())
    }

    /// A JSON document that must keep its own shape; metadata goes to a sidecar.
    pub fn plain_json(&mut self, rel: &str, body: &str) -> CliResult<()> {
        self.write(rel, body.as_bytes())?;
        self.sidecar(rel)
    }

    pub fn csv(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        self.write(rel, bytes)?;
        self.sidecar(rel)
    }

    pub fn png(&mut self, rel: &str, img: &figkit::raster::RgbImage) -> CliResult<()> {
        self.png_bare(rel, img)?;
        self.sidecar(rel)
    }

    /// PNG without its own sidecar, for directories of tiles covered by one.
    pub fn png_bare(&mut self, rel: &str, img: &figkit::raster::RgbImage) -> CliResult<()> {
        let bytes = figkit::io::encode_png(img)?;
        self.write(rel, &bytes)
    }

    /// Metadata sidecar for a whole directory of bare artifacts.
    pub fn directory_meta(&mut self, rel: &str) -> CliResult<()> {
        self.sidecar(rel)
    }

    pub fn bytes(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        self.write(rel, bytes)?;
        self.sidecar(rel)
    }

    pub fn svg(&mut self, rel: &str, svg: &str) -> CliResult<()> {
        let meta = figkit::viz::xml_escape(&serde_json::to_string(&self.meta_value()).expect("metadata serializes"));
        let at = svg
            .find("<svg")
            .and_then(|s| svg[s..].find('>').map(|e| s + e + 1))
            .ok_or_else(|| CliError::Config("renderer produced no <svg> element".into()))?;
        let doc = format!("{}\n<metadata>{meta}</metadata>{}", &svg[..at], &svg[at..]);
        self.write(rel, doc.as_bytes())
    }
}

pub fn pretty<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Core(e.into()))
}
