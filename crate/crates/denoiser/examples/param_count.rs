use candle_core::{DType, Device};
use wavex_denoiser::{DenoiserConfig, UNet};
fn main() {
    let desk = UNet::build(&DenoiserConfig::desk(), 0, &Device::Cpu, DType::F32).unwrap();
    println!("desk: {}", desk.param_count());
    let r = UNet::build(&DenoiserConfig::reference(), 0, &Device::Cpu, DType::F32).unwrap();
    println!("reference: {}", r.param_count());
}
