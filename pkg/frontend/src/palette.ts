/** Gesture palette: one button per command, a confidence slider, and an
 * image drop input. Button clicks post {class_id, confidence}; files get
 * converted to PGM client-side before upload. Acks and rejections render
 * inline; a lost connection disables the whole palette.
 */

import type { GestureAck } from "./protocol.js";
import { DEFAULT_COMMANDS } from "./protocol.js";

export interface PaletteOptions {
  commands?: ReadonlyArray<{ classId: number; label: string }>;
  onCommand: (classId: number, confidence: number) => void;
  onFile?: (file: Blob) => void;
  initialConfidence?: number;
}

export class Palette {
  private readonly doc: Document;
  private readonly buttons: HTMLButtonElement[] = [];
  private readonly slider: HTMLInputElement;
  private readonly sliderValue: HTMLElement;
  private readonly status: HTMLElement;
  private readonly reconnect: HTMLElement;

  constructor(
    readonly el: HTMLElement,
    opts: PaletteOptions,
  ) {
    this.doc = el.ownerDocument;
    el.classList.add("palette");

    const buttonRow = this.doc.createElement("div");
    buttonRow.className = "commands";
    for (const { classId, label } of opts.commands ?? DEFAULT_COMMANDS) {
      const btn = this.doc.createElement("button");
      btn.className = "cmd";
      btn.dataset.classId = String(classId);
      btn.textContent = label;
      btn.addEventListener("click", () => {
        opts.onCommand(classId, Number(this.slider.value));
      });
      buttonRow.appendChild(btn);
      this.buttons.push(btn);
    }
    el.appendChild(buttonRow);

    const sliderRow = this.doc.createElement("label");
    sliderRow.className = "confidence-row";
    sliderRow.append("confidence ");
    this.slider = this.doc.createElement("input");
    this.slider.type = "range";
    this.slider.className = "confidence";
    this.slider.min = "0";
    this.slider.max = "1";
    this.slider.step = "0.01";
    this.slider.value = String(opts.initialConfidence ?? 0.9);
    this.sliderValue = this.doc.createElement("span");
    this.sliderValue.className = "confidence-value";
    this.sliderValue.textContent = this.slider.value;
    this.slider.addEventListener("input", () => {
      this.sliderValue.textContent = this.slider.value;
    });
    sliderRow.append(this.slider, this.sliderValue);
    el.appendChild(sliderRow);

    if (opts.onFile) {
      const file = this.doc.createElement("input");
      file.type = "file";
      file.className = "frame-file";
      file.accept = "image/*";
      file.addEventListener("change", () => {
        if (file.files && file.files[0]) opts.onFile?.(file.files[0]);
      });
      el.appendChild(file);
    }

    this.status = this.doc.createElement("div");
    this.status.className = "ack-status";
    el.appendChild(this.status);

    this.reconnect = this.doc.createElement("div");
    this.reconnect.className = "reconnect-prompt";
    this.reconnect.textContent = "stream disconnected, reconnecting...";
    this.reconnect.hidden = true;
    el.appendChild(this.reconnect);
  }

  get confidence(): number {
    return Number(this.slider.value);
  }

  setConfidence(value: number): void {
    this.slider.value = String(value);
    this.sliderValue.textContent = this.slider.value;
  }

  setConnected(connected: boolean): void {
    for (const btn of this.buttons) btn.disabled = !connected;
    this.el.classList.toggle("disconnected", !connected);
    this.reconnect.hidden = connected;
  }

  showAck(ack: GestureAck): void {
    if (ack.status === "accepted") {
      this.status.className = "ack-status accepted";
      this.status.textContent =
        `queued #${ack.queue_position}: ${ack.command} speed ${ack.speed} ` +
        `cell (${ack.cell[0]},${ack.cell[1]})`;
    } else {
      this.status.className = "ack-status rejection";
      this.status.textContent = `rejected: ${ack.reason}`;
    }
  }

  showError(text: string): void {
    this.status.className = "ack-status error";
    this.status.textContent = text;
  }
}
