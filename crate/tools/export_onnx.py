"""Export torchvision's MobileNetV2 to ONNX for the ingestion tests.

Weights are irrelevant to receptive-field analysis, so initializer payloads
are stripped (shapes are kept) to keep the fixture small.

    python3 tools/export_onnx.py fixtures/mobilenet_v2.onnx
"""

import sys

import onnx
import torch
import torchvision


def main(path: str) -> None:
    model = torchvision.models.mobilenet_v2(weights=None).eval()
    torch.onnx.export(
        model,
        torch.randn(1, 3, 224, 224),
        path,
        opset_version=13,
        input_names=["image"],
        output_names=["logits"],
        dynamo=False,
    )
    m = onnx.load(path)
    for t in m.graph.initializer:
        t.ClearField("raw_data")
        t.ClearField("float_data")
        t.ClearField("int64_data")
    onnx.save(m, path)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures/mobilenet_v2.onnx")
