pub mod arith;
pub mod cusps;
pub mod exec;
pub mod expand;
pub mod modform;
pub mod numeric;
pub mod petersson;
