use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::codec::CoderController;
use crate::error::{Error, Result};
use crate::plant::PlantModel;
use crate::reach::DEFAULT_DELTA_K;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolEvent {
    pub step: usize,
    /// 1-based symbol.
    pub symbol: usize,
    pub alphabet: usize,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFault {
    pub step: usize,
    pub state: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    /// `x_0, …, x_horizon` (shorter on a fault).
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub symbols: Vec<SymbolEvent>,
    /// Input indices into U.
    pub inputs: Vec<usize>,
    /// Bits sent in each completed clock period.
    pub bits_per_cycle: Vec<f64>,
    /// Whether `states[k]` lies in int K with margin above `δ_K`.
    pub in_int_k: Vec<bool>,
    pub fault: Option<TraceFault>,
}

impl SimulationTrace {
    pub fn total_bits(&self) -> f64 {
        self.symbols.iter().map(|e| (e.alphabet as f64).log2()).sum()
    }

    /// Writes one CSV row per step.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.states.first().map_or(0, Vec::len);
        let p = self.outputs.first().map_or(0, Vec::len);
        let mut header = vec!["step".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..p).map(|i| format!("y{i}")));
        header.extend(["symbol", "alphabet", "input", "cumulative_bits", "in_int_k"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        let mut bits = 0.0;
        for (k, x) in self.states.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            match self.outputs.get(k) {
                Some(y) => row.extend(y.iter().map(|v| v.to_string())),
                None => row.extend((0..p).map(|_| String::new())),
            }
            match self.symbols.get(k) {
                Some(e) => row.extend([e.symbol.to_string(), e.alphabet.to_string()]),
                None => row.extend([String::new(), String::new()]),
            }
            row.push(self.inputs.get(k).map_or(String::new(), |u| u.to_string()));
            if let Some(e) = self.symbols.get(k) {
                bits += (e.alphabet as f64).log2();
            }
            row.push(bits.to_string());
            row.push(self.in_int_k[k].to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Runs plant and coder-controller from `x0` for `horizon` steps.
pub fn run_closed_loop(plant: &PlantModel, cc: &CoderController, x0: &[f64], horizon: usize) -> SimulationTrace {
    let inside = |x: &[f64]| plant.k.point_margin(x) > DEFAULT_DELTA_K;
    let mut trace = SimulationTrace {
        states: vec![x0.to_vec()],
        outputs: Vec::new(),
        symbols: Vec::new(),
        inputs: Vec::new(),
        bits_per_cycle: Vec::new(),
        in_int_k: vec![inside(x0)],
        fault: None,
    };
    if !plant.x.contains_point(x0) {
        trace.fault = Some(TraceFault {
            step: 0,
            state: x0.to_vec(),
            reason: "initial state outside X".into(),
        });
        return trace;
    }
    let mut window: Vec<f64> = Vec::new();
    let mut symbol = 1;
    let mut bits = 0.0;
    for k in 0..horizon {
        let x = trace.states[k].clone();
        let y = plant.output.eval(&x);
        let p = k % cc.period;
        let c = cc.phase[p];
        if c == 0 {
            window.clear();
            symbol = 1;
        }
        window.extend(&y);
        trace.outputs.push(y);
        let sent = if c == cc.s {
            match cc.encode(&window) {
                Ok(sym) => {
                    symbol = sym;
                    sym
                }
                Err(_) => {
                    trace.fault = Some(TraceFault {
                        step: k,
                        state: x,
                        reason: format!("no symbol for observation {window:?}"),
                    });
                    return trace;
                }
            }
        } else {
            1
        };
        trace.symbols.push(SymbolEvent {
            step: k,
            symbol: sent,
            alphabet: cc.alphabets[p],
        });
        bits += (cc.alphabets[p] as f64).log2();
        if p + 1 == cc.period {
            trace.bits_per_cycle.push(bits);
            bits = 0.0;
        }
        let u = cc.control(c, symbol);
        trace.inputs.push(u);
        match plant.step(&x, u) {
            Ok(next) => {
                trace.in_int_k.push(inside(&next));
                trace.states.push(next);
            }
            Err(e) => {
                trace.fault = Some(TraceFault {
                    step: k + 1,
                    state: x,
                    reason: e.to_string(),
                });
                return trace;
            }
        }
    }
    trace
}
