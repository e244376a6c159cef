pub mod analysis;
pub mod game;
pub mod heuristics;
pub mod inventory;
pub mod io;
pub mod llm;
pub mod map;
pub mod persona;
pub mod tournament;
