//! Run configuration: one JSON document pinning the generator, its seed,
//! the output format and count, reseeding and the entropy source.
//!
//! Layers apply in order: config file, `--generator`, seed file, then the
//! remaining flags. The resolved document is what `--record` writes, and
//! replaying it reproduces the stream.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::entropy::ReseedPolicy;
use crate::error::{Error, Result};
use crate::generator::{BitPacker, EntropySpec, Generator, GeneratorKind, GeneratorSpec, Reseeded};
use crate::logistic::LogisticGenerator;

pub const CONFIG_ENV: &str = "CHAOSRAND_CONFIG";
pub const DEFAULT_COUNT: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// Outputs packed MSB-first into bytes; the last byte is zero padded.
    Raw,
    /// One zero-padded hexadecimal word per line.
    #[default]
    Hex,
    /// `index,value` rows in decimal.
    Csv,
    /// A JSON array of integers.
    Json,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Raw => "raw",
            OutputFormat::Hex => "hex",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            OutputFormat::Raw,
            OutputFormat::Hex,
            OutputFormat::Csv,
            OutputFormat::Json,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown output format {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorSpec,
    pub format: OutputFormat,
    pub count: u64,
    pub reseed: Option<ReseedPolicy>,
    pub entropy: EntropySpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            generator: GeneratorSpec::default(),
            format: OutputFormat::default(),
            count: DEFAULT_COUNT,
            reseed: None,
            entropy: EntropySpec::default(),
        }
    }
}

/// Command-line values layered over a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub generator: Option<GeneratorKind>,
    pub seed: Option<Value>,
    pub format: Option<OutputFormat>,
    pub count: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RunConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Applies flag overrides and validates the result.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self> {
        if let Some(kind) = o.generator {
            if kind != self.generator.kind() {
                self.generator = GeneratorSpec::default_for(kind);
            }
        }
        if let Some(seed) = &o.seed {
            self.generator = apply_seed(&self.generator, seed)?;
        }
        if let Some(format) = o.format {
            self.format = format;
        }
        if let Some(count) = o.count {
            self.count = count;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("count must be at least 1"));
        }
        if let Some(policy) = &self.reseed {
            policy.validate()?;
        }
        if let EntropySpec::SimulatedSensor(model) = &self.entropy {
            model.validate()?;
        }
        self.generator.build().map(|_| ())
    }

    /// Builds the configured generator, burn-in done, with reseeding attached.
    pub fn build(&self) -> Result<Box<dyn Generator>> {
        let inner: Box<dyn Generator> = match &self.generator {
            GeneratorSpec::Logistic(config) => {
                let mut g = LogisticGenerator::with_recovery_source(*config, self.entropy.open()?);
                g.burn_in();
                Box::new(g)
            }
            spec => spec.build()?,
        };
        Ok(match self.reseed {
            Some(policy) => Box::new(Reseeded::new(inner, self.entropy.open()?, policy)?),
            None => inner,
        })
    }

    /// Writes exactly `count` outputs in the configured format.
    pub fn generate(&self, out: &mut dyn Write) -> Result<()> {
        let mut g = self.build()?;
        write_outputs(&mut *g, self.count, self.format, out)
    }
}

/// Merges a seed document into a generator spec. Keys of the seed object
/// replace the matching fields; a `kind` key must agree with the spec.
pub fn apply_seed(spec: &GeneratorSpec, seed: &Value) -> Result<GeneratorSpec> {
    let Value::Object(patch) = seed else {
        return Err(Error::invalid("seed file must hold a JSON object"));
    };
    let mut doc = serde_json::to_value(spec)?;
    let fields = doc
        .as_object_mut()
        .expect("generator spec serializes to an object");
    for (key, value) in patch {
        if key == "kind" && value != &fields["kind"] {
            return Err(Error::invalid(format!(
                "seed file is for {value}, generator is {}",
                spec.kind()
            )));
        }
        fields.insert(key.clone(), value.clone());
    }
    Ok(serde_json::from_value(doc)?)
}

pub fn write_outputs(
    g: &mut dyn Generator,
    count: u64,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<()> {
    let width = g.output_bits();
    let digits = width.div_ceil(4) as usize;
    match format {
        OutputFormat::Raw => {
            let mut packer = BitPacker::default();
            let mut buf = Vec::with_capacity(8192);
            for _ in 0..count {
                packer.push(g.next_output()?, width);
                while let Some(b) = packer.pop_byte() {
                    buf.push(b);
                }
                if buf.len() >= 8000 {
                    out.write_all(&buf)?;
                    buf.clear();
                }
            }
            let pending = packer.pending_bits();
            if pending > 0 {
                packer.push(0, 8 - pending);
                buf.extend(packer.pop_byte());
            }
            out.write_all(&buf)?;
        }
        OutputFormat::Hex => {
            for _ in 0..count {
                writeln!(out, "{:0digits$x}", g.next_output()?)?;
            }
        }
        OutputFormat::Csv => {
            writeln!(out, "index,value")?;
            for i in 0..count {
                writeln!(out, "{i},{}", g.next_output()?)?;
            }
        }
        OutputFormat::Json => {
            let values = (0..count)
                .map(|_| g.next_output())
                .collect::<Result<Vec<_>>>()?;
            serde_json::to_writer(&mut *out, &values)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}
