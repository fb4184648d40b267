//! Executor registry and plugin discovery.
//!
//! The registry maps executor names to descriptors and instantiates
//! executors on demand. Built-ins (local plus the batch dialects) are
//! always present; additional executors are discovered from `.exdesc`
//! manifest files found on `PORTAJOB_PLUGIN_PATH`. A manifest describes an
//! external scheduler helper honoring the command contract; a later path
//! entry shadows earlier ones and built-ins of the same name and version.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::dialect::{builtin_dialect, command_dialect};
use crate::error::{Error, Result};
use crate::executor::batch::BatchExecutor;
use crate::executor::local::LocalExecutor;
use crate::executor::{ExecutorConfig, JobExecutor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Version(pub u64, pub u64, pub u64);

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.0, self.1, self.2)
    }
}

impl FromStr for Version {
    type Err = Error;

    fn from_str(s: &str) -> Result<Version> {
        let mut parts = s.trim().split('.');
        let mut next = || -> Result<u64> {
            parts
                .next()
                .unwrap_or("0")
                .parse()
                .map_err(|_| Error::Other(format!("invalid version '{s}'")))
        };
        let v = Version(next()?, next()?, next()?);
        if parts.next().is_some() {
            return Err(Error::Other(format!("invalid version '{s}'")));
        }
        Ok(v)
    }
}

impl Version {
    /// Prefix constraint match: "1" matches any 1.x.y, "1.2" any 1.2.z,
    /// "1.2.3" exactly.
    pub fn matches(&self, constraint: &str) -> bool {
        let want: Vec<&str> = constraint.trim().split('.').collect();
        let have = [self.0, self.1, self.2];
        if want.len() > 3 {
            return false;
        }
        want.iter()
            .zip(have)
            .all(|(w, h)| w.parse::<u64>().map(|w| w == h).unwrap_or(false))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecutorSource {
    BuiltIn,
    Plugin(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum DescriptorKind {
    /// Fork-based local execution.
    Local,
    /// Batch executor over a built-in dialect.
    Dialect(String),
    /// Batch executor over an external command honoring the contract.
    Command(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutorDescriptor {
    pub name: String,
    pub version: Version,
    pub source: ExecutorSource,
    kind: DescriptorKind,
}

impl ExecutorDescriptor {
    fn builtin(name: &str, kind: DescriptorKind) -> ExecutorDescriptor {
        ExecutorDescriptor {
            name: name.to_string(),
            version: Version(1, 0, 0),
            source: ExecutorSource::BuiltIn,
            kind,
        }
    }

    /// Parses a `.exdesc` manifest: `key: value` lines with keys `name`,
    /// `version`, and either `dialect` (a built-in dialect to reuse) or
    /// `command` (whitespace-split argv; a relative program resolves
    /// against the manifest's directory).
    pub fn from_manifest(path: &Path) -> Result<ExecutorDescriptor> {
        let text = std::fs::read_to_string(path)?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| {
                Error::Other(format!("{}: malformed line {line:?}", path.display()))
            })?;
            fields.insert(key.trim(), value.trim());
        }
        let name = fields
            .get("name")
            .ok_or_else(|| Error::Other(format!("{}: missing name", path.display())))?
            .to_string();
        let version: Version = fields.get("version").copied().unwrap_or("1.0.0").parse()?;
        let kind = match (fields.get("dialect"), fields.get("command")) {
            (Some(d), None) => DescriptorKind::Dialect(d.to_string()),
            (None, Some(c)) => {
                let mut argv: Vec<String> =
                    c.split_whitespace().map(str::to_string).collect();
                if argv.is_empty() {
                    return Err(Error::Other(format!(
                        "{}: empty command",
                        path.display()
                    )));
                }
                let program = PathBuf::from(&argv[0]);
                if program.is_relative() && argv[0].contains('/') {
                    if let Some(dir) = path.parent() {
                        argv[0] = dir.join(program).to_string_lossy().to_string();
                    }
                }
                DescriptorKind::Command(argv)
            }
            _ => {
                return Err(Error::Other(format!(
                    "{}: need exactly one of dialect/command",
                    path.display()
                )))
            }
        };
        Ok(ExecutorDescriptor {
            name,
            version,
            source: ExecutorSource::Plugin(path.to_path_buf()),
            kind,
        })
    }
}

pub struct Registry {
    /// name -> descriptors, one per version; later registrations replace
    /// same-name-same-version entries.
    entries: BTreeMap<String, Vec<ExecutorDescriptor>>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Registry {
        let mut registry = Registry::empty();
        registry.register(ExecutorDescriptor::builtin("local", DescriptorKind::Local));
        for dialect in ["slurm", "pbs", "lsf", "mock"] {
            registry.register(ExecutorDescriptor::builtin(
                dialect,
                DescriptorKind::Dialect(dialect.to_string()),
            ));
        }
        registry
    }

    /// Built-ins plus plugins from the colon-separated
    /// `PORTAJOB_PLUGIN_PATH`.
    pub fn from_environment() -> Registry {
        let mut registry = Registry::with_builtins();
        if let Ok(paths) = std::env::var("PORTAJOB_PLUGIN_PATH") {
            for dir in paths.split(':').filter(|d| !d.is_empty()) {
                registry.discover_plugins(Path::new(dir));
            }
        }
        registry
    }

    pub fn register(&mut self, descriptor: ExecutorDescriptor) {
        let slot = self.entries.entry(descriptor.name.clone()).or_default();
        match slot.iter_mut().find(|d| d.version == descriptor.version) {
            Some(existing) => {
                log::info!(
                    "executor {} {} from {:?} shadows {:?}",
                    descriptor.name,
                    descriptor.version,
                    descriptor.source,
                    existing.source
                );
                *existing = descriptor;
            }
            None => slot.push(descriptor),
        }
    }

    /// Loads every `*.exdesc` manifest in `dir`, in sorted file order.
    /// Unreadable manifests are logged and skipped.
    pub fn discover_plugins(&mut self, dir: &Path) {
        let Ok(entries) = std::fs::read_dir(dir) else {
            log::warn!("plugin path {} is not readable", dir.display());
            return;
        };
        let mut manifests: Vec<PathBuf> = entries
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "exdesc"))
            .collect();
        manifests.sort();
        for manifest in manifests {
            match ExecutorDescriptor::from_manifest(&manifest) {
                Ok(descriptor) => self.register(descriptor),
                Err(e) => log::warn!("skipping plugin manifest: {e}"),
            }
        }
    }

    pub fn descriptors(&self) -> Vec<&ExecutorDescriptor> {
        self.entries.values().flatten().collect()
    }

    pub fn known_names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn descriptor(
        &self,
        name: &str,
        constraint: Option<&str>,
    ) -> Result<&ExecutorDescriptor> {
        let versions = self.entries.get(name).ok_or_else(|| Error::UnknownExecutor {
            name: name.to_string(),
            known: self.known_names(),
        })?;
        versions
            .iter()
            .filter(|d| constraint.is_none_or(|c| d.version.matches(c)))
            .max_by_key(|d| d.version)
            .ok_or_else(|| Error::NoMatchingVersion {
                name: name.to_string(),
                constraint: constraint.unwrap_or("*").to_string(),
            })
    }

    /// Instantiates the named executor. `name` may carry a version
    /// constraint as `name@prefix`; the highest matching version wins.
    pub fn get_instance(
        &self,
        name: &str,
        config: ExecutorConfig,
    ) -> Result<Arc<dyn JobExecutor>> {
        let (name, constraint) = match name.split_once('@') {
            Some((n, c)) => (n, Some(c)),
            None => (name, None),
        };
        let descriptor = self.descriptor(name, constraint)?;
        let executor: Arc<dyn JobExecutor> = match &descriptor.kind {
            DescriptorKind::Local => Arc::new(LocalExecutor::new(config)),
            DescriptorKind::Dialect(dialect_name) => {
                let dialect =
                    builtin_dialect(dialect_name, &config).ok_or_else(|| {
                        Error::Other(format!("unknown dialect '{dialect_name}'"))
                    })?;
                Arc::new(BatchExecutor::new(name, dialect, config))
            }
            DescriptorKind::Command(argv) => Arc::new(BatchExecutor::new(
                name,
                command_dialect(name, argv),
                config,
            )),
        };
        Ok(executor)
    }
}

static GLOBAL: OnceLock<Registry> = OnceLock::new();

/// Instantiates an executor from the process-wide registry (built-ins plus
/// `PORTAJOB_PLUGIN_PATH`, captured on first use) with that executor's
/// default configuration.
pub fn get_instance(name: &str) -> Result<Arc<dyn JobExecutor>> {
    let registry = GLOBAL.get_or_init(Registry::from_environment);
    let base = name.split('@').next().unwrap_or(name);
    registry.get_instance(name, ExecutorConfig::for_executor(base))
}
