"""Packet compressed sensing imaging.

Images are split into self-contained packets of pseudo-randomly chosen
pixels; any subset of received packets reconstructs the whole image by
L1-regularized fitting in the DCT domain.
"""
from .channel import ChannelModel, apply_channel, ber_from_loss, net_efficiency, optimal_pdp
from .framing import (
    Ax25Address,
    Framing,
    crc16,
    decode_ax25,
    decode_ssdv_style,
    encode_ax25,
    encode_ssdv_style,
    kiss_unwrap,
    kiss_wrap,
)
from .image_model import Image, quantized_reference, rgb_to_ycbcr, ycbcr_to_rgb
from .pdp import PdpHeader, PdpPayload, decode_pdp, encode_pdp, packetize
from .pixel_sequence import TransmissionPlan, build_permutation, make_plan, packet_slice
from .reconstruction import (
    DctBasisPursuit,
    ReceivedPixelSet,
    SolverConfig,
    psnr,
    reconstruct,
    solve_channel,
)

__version__ = "0.1.0"
