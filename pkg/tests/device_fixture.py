"""A small hand-labeled device corpus used across the test suite.

Twenty-two synthetic records, one per sample device, with per-class
supports H=4, S=4, E=4, M=4, P=3, A=3. Vendor/product tokens alone make
the classes linearly separable, which several trainer tests rely on.
"""
from __future__ import annotations

from iotcve.cpe import CpeName, Leaf, Logical, Operator, Part, LogicalTest
from iotcve.corpus import Taxonomy
from iotcve.nvd import VulnerabilityRecord

# (class, vendor, product, summary)
DEVICES = [
    ("H", "d-link", "dir-815", "Cross-site request forgery in the D-Link DIR-815 home wireless router lets remote attackers change the admin password."),
    ("H", "opticam", "i5", "The Opticam i5 home surveillance camera exposes the video stream without authentication."),
    ("H", "meetcircle", "circle_with_disney", "Circle with Disney parental control appliances accept unsigned firmware images over the local network."),
    ("H", "amazon", "amazon_key", "Amazon Key home access devices allow replay of unlock messages within the pairing window."),
    ("S", "siemens", "sinumerik_828d", "A crafted packet crashes the Siemens SINUMERIK 828D machine tool controller used in industrial automation."),
    ("S", "yokogawa", "fci", "Yokogawa FCI autonomous plant controllers ship with a hardcoded maintenance account."),
    ("S", "mbusa", "cockpit", "The MBUSA cockpit automation unit processes unauthenticated diagnostic frames from the vehicle bus."),
    ("S", "vivotek", "camera", "Vivotek industrial surveillance cameras contain a stack buffer overflow in the RTSP service."),
    ("E", "juniper", "srx100", "Juniper SRX100 firewalls mishandle fragmented packets causing the flow daemon to restart."),
    ("E", "cisco", "staros", "Cisco StarOS on ASR 5000 carrier routers allows a remote attacker to bypass the CLI authentication."),
    ("E", "citrix", "netscaler_gateway", "Citrix NetScaler Gateway load balancers leak session tokens in redirect URLs."),
    ("E", "polycom", "qdx6000", "Polycom QDX6000 video conferencing endpoints run an outdated web server vulnerable to directory traversal."),
    ("M", "samsung", "galaxy_s6", "The baseband processor of the Samsung Galaxy S6 smart phone accepts over-the-air management messages without validation."),
    ("M", "amazon", "kindle_fire", "Amazon Kindle Fire tablets keep the bootloader unlocked in a diagnostic mode."),
    ("M", "mi", "mi_router_3", "The Mi Router 3 portable LTE hotspot stores the Wi-Fi passphrase in a world-readable file."),
    ("M", "huawei", "watch_2", "Huawei Watch 2 smartwatches pair with any controller in range during setup."),
    ("P", "hp", "integrated_lights-out", "HP Integrated Lights-Out server management modules allow remote code execution before authentication."),
    ("P", "hp", "nonstop_server", "HP NonStop Server platforms expose an unauthenticated remote console service."),
    ("P", "intel", "s7200ap", "Intel S7200AP server boards include a management firmware with a privilege escalation flaw."),
    ("A", "drobo", "5n2", "Drobo 5N2 enterprise storage appliances expose an unauthenticated NAS administration API."),
    ("A", "tbk_vision", "tbk-dvr4216", "TBK Vision TBK-DVR4216 enterprise video recorders allow credential disclosure through a crafted URL."),
    ("A", "ricoh", "d2200", "Ricoh D2200 enterprise printing systems execute unsigned service jobs received over the network."),
]

EXPECTED_SUPPORTS = {"H": 4, "S": 4, "E": 4, "M": 4, "P": 3, "A": 3}


def device_records(year: int = 2018) -> tuple[list[VulnerabilityRecord], dict[str, str]]:
    """Build the records plus their label map."""
    records = []
    labels = {}
    for i, (code, vendor, product, summary) in enumerate(DEVICES, start=1):
        cve_id = f"CVE-{year}-9{i:04d}"
        cpe = CpeName(
            part=Part.HARDWARE, vendor=vendor, product=product, version=Logical.NA
        )
        records.append(
            VulnerabilityRecord(
                cve_id=cve_id,
                summary=summary,
                config=LogicalTest(Operator.OR, (Leaf(cpe),)),
            )
        )
        labels[cve_id] = code
    return records, labels


def labels_csv(labels: dict[str, str]) -> str:
    lines = ["cve_id,class"]
    lines.extend(f"{cve_id},{code}" for cve_id, code in labels.items())
    return "\n".join(lines) + "\n"


def default_taxonomy() -> Taxonomy:
    return Taxonomy.default()
