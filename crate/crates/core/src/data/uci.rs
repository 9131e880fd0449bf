use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::data::encode::{ColumnKind, EncodingPlan, RawTable};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// The four tabular benchmark sets, stored as the UCI archive's comma-separated files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DatasetId {
    Iris,
    Wine,
    Car,
    Agaricus,
}

const ARCHIVE: &str = "https://archive.ics.uci.edu/ml/machine-learning-databases";

fn ordinal(levels: &[&str]) -> ColumnKind {
    ColumnKind::Ordinal(levels.iter().map(|s| s.to_string()).collect())
}

impl DatasetId {
    pub const ALL: [DatasetId; 4] = [Self::Iris, Self::Wine, Self::Car, Self::Agaricus];

    pub fn name(self) -> &'static str {
        match self {
            Self::Iris => "iris",
            Self::Wine => "wine",
            Self::Car => "car",
            Self::Agaricus => "agaricus",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Iris => "iris.data",
            Self::Wine => "wine.data",
            Self::Car => "car.data",
            Self::Agaricus => "agaricus-lepiota.data",
        }
    }

    pub fn url(self) -> String {
        let dir = match self {
            Self::Iris => "iris",
            Self::Wine => "wine",
            Self::Car => "car",
            Self::Agaricus => "mushroom",
        };
        format!("{ARCHIVE}/{dir}/{}", self.file_name())
    }

    /// SHA-256 of the pinned copy under `data/`.
    pub fn sha256(self) -> &'static str {
        match self {
            Self::Iris => "36f668d1cbc29a8c2c1128c5d2f0d400fa04ed4dc62d12246f44ce9360360cc0",
            Self::Wine => "b5e6cbacfa1dcb13f28459e3e501a6271672016433281a2e50331f71162acc41",
            Self::Car => "b703a9ac69f11e64ce8c223c0a40de4d2e9d769f7fb20be5f8f2e8a619893d83",
            Self::Agaricus => "e65d082030501a3ebcbcd7c9f7c71aa9d28fdfff463bf4cf4716a3fe13ac360e",
        }
    }

    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Self::Iris => &["Iris-setosa", "Iris-versicolor", "Iris-virginica"],
            Self::Wine => &["1", "2", "3"],
            Self::Car => &["unacc", "acc", "good", "vgood"],
            Self::Agaricus => &["e", "p"],
        }
    }

    pub fn label_column(self) -> usize {
        match self {
            Self::Iris => 4,
            Self::Car => 6,
            Self::Wine | Self::Agaricus => 0,
        }
    }

    /// Column treatment: numeric sets pass through, CAR is ordinal (its levels
    /// are ordered), AGARICUS is one-hot with `?` kept as a category.
    pub fn column_kinds(self) -> Vec<ColumnKind> {
        match self {
            Self::Iris => vec![ColumnKind::Numeric; 4],
            Self::Wine => vec![ColumnKind::Numeric; 13],
            Self::Car => {
                let price = ["low", "med", "high", "vhigh"];
                vec![
                    ordinal(&price),
                    ordinal(&price),
                    ordinal(&["2", "3", "4", "5more"]),
                    ordinal(&["2", "4", "more"]),
                    ordinal(&["small", "med", "big"]),
                    ordinal(&["low", "med", "high"]),
                ]
            }
            Self::Agaricus => vec![ColumnKind::OneHot; 22],
        }
    }

    pub fn path_in(self, dir: &Path) -> PathBuf {
        dir.join(self.file_name())
    }

    /// Reads, checks and encodes the dataset from `dir`.
    pub fn load(self, dir: &Path) -> Result<Dataset> {
        let path = self.path_in(dir);
        let table = RawTable::read(&path)?;
        let plan = EncodingPlan::fit(&table, self.label_column(), &self.column_kinds(), self.classes())?;
        Dataset::from_table(&table, plan)
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("mushroom") && *d == Self::Agaricus))
            .ok_or_else(|| Error::invalid(format!("unknown dataset {s:?} (iris, wine, car, agaricus)")))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Checks a file against the pinned digest.
pub fn verify_file(id: DatasetId, path: &Path) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let got = sha256_hex(&bytes);
    if got == id.sha256() {
        Ok(())
    } else {
        Err(Error::Dataset(format!(
            "{}: sha256 {got} does not match pinned {}",
            path.display(),
            id.sha256()
        )))
    }
}

/// `data/` at the workspace root, where the pinned files live.
pub fn default_data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}
