use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Race {
    White,
    Black,
    Hispanic,
    Asian,
    Other,
}

impl FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "female" => Ok(Sex::Female),
            "m" | "male" => Ok(Sex::Male),
            other => Err(Error::invalid(format!("unknown sex code {other:?} (expected M or F)"))),
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::Female => "F",
            Sex::Male => "M",
        })
    }
}

impl FromStr for Race {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "white" => Ok(Race::White),
            "black" => Ok(Race::Black),
            "hispanic" => Ok(Race::Hispanic),
            "asian" => Ok(Race::Asian),
            "other" => Ok(Race::Other),
            other => Err(Error::invalid(format!("unknown race {other:?}"))),
        }
    }
}

impl fmt::Display for Race {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Race::White => "white",
            Race::Black => "black",
            Race::Hispanic => "hispanic",
            Race::Asian => "asian",
            Race::Other => "other",
        })
    }
}

/// Exogenous attributes of one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeCovariates {
    pub sex: Sex,
    /// School grade, 7 to 12.
    pub grade: u8,
    pub race: Race,
    pub hh_smokes: bool,
    pub mom_edu: bool,
    /// Cigarette price in cents per pack; strictly positive.
    pub price: f64,
    pub school_id: u32,
}

impl Default for NodeCovariates {
    fn default() -> Self {
        Self {
            sex: Sex::Female,
            grade: 9,
            race: Race::White,
            hh_smokes: false,
            mom_edu: false,
            price: 100.0,
            school_id: 0,
        }
    }
}

impl NodeCovariates {
    pub fn validate(&self) -> Result<()> {
        if !(7..=12).contains(&self.grade) {
            return Err(Error::invalid(format!("grade {} outside 7..=12", self.grade)));
        }
        if !(self.price > 0.0) || !self.price.is_finite() {
            return Err(Error::invalid(format!("price must be positive, got {}", self.price)));
        }
        Ok(())
    }
}

/// Per-node attributes for one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateTable {
    nodes: Vec<NodeCovariates>,
}

impl CovariateTable {
    pub fn new(nodes: Vec<NodeCovariates>) -> Result<Self> {
        for (i, c) in nodes.iter().enumerate() {
            c.validate().map_err(|e| Error::invalid(format!("node {i}: {e}")))?;
        }
        Ok(Self { nodes })
    }

    /// `n` identical default nodes. Handy for experiments where only the
    /// network terms matter.
    pub fn uniform(n: usize) -> Self {
        Self {
            nodes: vec![NodeCovariates::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, i: usize) -> &NodeCovariates {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[NodeCovariates] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [NodeCovariates] {
        &mut self.nodes
    }
}

/// Covariate functions `c(X_i)` entering the action baseline `v(X_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeCovariate {
    Constant,
    LogPrice,
    HhSmokes,
    MomEdu,
    Black,
    GradeAtLeast9,
    Male,
}

impl NodeCovariate {
    #[inline]
    pub fn eval(self, x: &NodeCovariates) -> f64 {
        match self {
            NodeCovariate::Constant => 1.0,
            NodeCovariate::LogPrice => x.price.ln(),
            NodeCovariate::HhSmokes => x.hh_smokes as u8 as f64,
            NodeCovariate::MomEdu => x.mom_edu as u8 as f64,
            NodeCovariate::Black => (x.race == Race::Black) as u8 as f64,
            NodeCovariate::GradeAtLeast9 => (x.grade >= 9) as u8 as f64,
            NodeCovariate::Male => (x.sex == Sex::Male) as u8 as f64,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            NodeCovariate::Constant => "const",
            NodeCovariate::LogPrice => "log_price",
            NodeCovariate::HhSmokes => "hh_smokes",
            NodeCovariate::MomEdu => "mom_edu",
            NodeCovariate::Black => "black",
            NodeCovariate::GradeAtLeast9 => "grade9plus",
            NodeCovariate::Male => "male",
        }
    }

    pub const ALL: [NodeCovariate; 7] = [
        NodeCovariate::Constant,
        NodeCovariate::LogPrice,
        NodeCovariate::HhSmokes,
        NodeCovariate::MomEdu,
        NodeCovariate::Black,
        NodeCovariate::GradeAtLeast9,
        NodeCovariate::Male,
    ];
}

/// Pair dummies `w_r(X_i, X_j)` entering the link baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairCovariate {
    Constant,
    SameSex,
    SameGrade,
    SameRace,
    DiffSex,
    DiffGrade,
    DiffRace,
}

impl PairCovariate {
    #[inline]
    pub fn eval(self, xi: &NodeCovariates, xj: &NodeCovariates) -> f64 {
        let b = match self {
            PairCovariate::Constant => true,
            PairCovariate::SameSex => xi.sex == xj.sex,
            PairCovariate::SameGrade => xi.grade == xj.grade,
            PairCovariate::SameRace => xi.race == xj.race,
            PairCovariate::DiffSex => xi.sex != xj.sex,
            PairCovariate::DiffGrade => xi.grade != xj.grade,
            PairCovariate::DiffRace => xi.race != xj.race,
        };
        b as u8 as f64
    }

    pub fn key(self) -> &'static str {
        match self {
            PairCovariate::Constant => "const",
            PairCovariate::SameSex => "same_sex",
            PairCovariate::SameGrade => "same_grade",
            PairCovariate::SameRace => "same_race",
            PairCovariate::DiffSex => "diff_sex",
            PairCovariate::DiffGrade => "diff_grade",
            PairCovariate::DiffRace => "diff_race",
        }
    }

    pub const ALL: [PairCovariate; 7] = [
        PairCovariate::Constant,
        PairCovariate::SameSex,
        PairCovariate::SameGrade,
        PairCovariate::SameRace,
        PairCovariate::DiffSex,
        PairCovariate::DiffGrade,
        PairCovariate::DiffRace,
    ];
}
