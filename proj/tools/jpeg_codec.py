#!/usr/bin/env python3
"""JPEG wrapper for the external codec interface (needs Pillow).

    jpeg_codec.py encode QUALITY   < image.pgm > payload.jpg
    jpeg_codec.py decode           < payload.jpg > image.pgm
"""
import io
import sys

from PIL import Image


def main() -> int:
    if len(sys.argv) < 2 or sys.argv[1] not in ("encode", "decode"):
        print(__doc__, file=sys.stderr)
        return 2
    data = sys.stdin.buffer.read()
    img = Image.open(io.BytesIO(data))
    out = io.BytesIO()
    if sys.argv[1] == "encode":
        quality = int(sys.argv[2]) if len(sys.argv) > 2 else 75
        img.save(out, format="JPEG", quality=quality)
    else:
        img.save(out, format="PPM")
    sys.stdout.buffer.write(out.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
